#!/usr/bin/env python3
"""Validate a JSON document against one of the schemas in docs/schema.

usage: validate_json.py SCHEMA_DIR SCHEMA_NAME DOCUMENT
"""
import json
import pathlib
import sys

import jsonschema
from referencing import Registry, Resource


def main() -> int:
    schema_dir = pathlib.Path(sys.argv[1])
    registry = Registry()
    for path in schema_dir.glob("*.schema.json"):
        doc = json.loads(path.read_text())
        registry = registry.with_resource(doc["$id"], Resource.from_contents(doc))
    schema = json.loads((schema_dir / sys.argv[2]).read_text())
    document = json.loads(pathlib.Path(sys.argv[3]).read_text())
    jsonschema.Draft202012Validator(schema, registry=registry).validate(document)
    return 0


if __name__ == "__main__":
    sys.exit(main())
