import json
from importlib import resources

import pytest
from jsonschema import Draft202012Validator
from referencing import Registry, Resource


def _load_schema(name):
    return json.loads(resources.files("tomkit.schemas").joinpath(name).read_text())


@pytest.fixture(scope="session")
def schema_validator():
    """Validator factory resolving cross-references between shipped schemas."""
    names = [
        "region_metrics.schema.json",
        "eval_report.schema.json",
        "eval_summary.schema.json",
        "loss_report.schema.json",
        "scene.schema.json",
    ]
    schemas = {name: _load_schema(name) for name in names}
    registry = Registry().with_resources(
        (name, Resource.from_contents(schema)) for name, schema in schemas.items()
    )

    def make(name):
        return Draft202012Validator(schemas[name], registry=registry)

    return make
