"""Principle catalog: templates, instantiation, taxonomy, rendering."""

import importlib.resources

import pytest

from agentconform import catalog, ir
from agentconform.builtins import BUILTIN_NAMES, builtin


def test_eleven_principles_with_cs_in_composer():
    ids = [t.id for t in catalog.TEMPLATES]
    assert ids == ["P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8",
                   "WF", "SL"]
    with pytest.raises(catalog.CatalogError):
        catalog.template("CS")


def test_instantiate_for_every_bundled_protocol():
    for name in BUILTIN_NAMES:
        model = builtin(name)
        for tmpl in catalog.TEMPLATES:
            prop = catalog.instantiate_for(model, tmpl.id)
            assert prop.principle == tmpl.id
            assert prop.cls in ir.PROPERTY_CLASSES


def test_instantiate_rejects_shape_mismatch():
    model = builtin("mcp")
    tmpl = catalog.template("P1")
    with pytest.raises(catalog.CatalogError):
        catalog.instantiate(tmpl, {"unauth_msgs": "prompt_tainted"}, model)


def test_taxonomy_covers_grid():
    for name in BUILTIN_NAMES:
        for tmpl in catalog.TEMPLATES:
            cls, note = catalog.taxonomy(name, tmpl.id)
            assert cls in ir.PROPERTY_CLASSES + (catalog.NOT_CATALOGED,)
            assert isinstance(note, str)


def test_aps_layer_mapping():
    assert catalog.aps_layer("WF") == "L2"
    assert catalog.aps_layer("SL") == "L3"
    assert catalog.aps_layer("P3") == "L4"
    assert catalog.aps_layer("P6") == "L6"
    assert catalog.aps_layer("CS") == "cross-layer"
    with pytest.raises(catalog.CatalogError):
        catalog.aps_layer("P99")


def test_rendered_catalog_matches_bundled_document():
    bundled = importlib.resources.files("agentconform").joinpath(
        "data/aasm.md").read_text()
    assert catalog.render_catalog() == bundled
