import json

import pytest

from scenec.catalog import EMPTY_CATALOG, catalog_from_dict, catalog_to_dict, load_catalog
from scenec.errors import CatalogError, MissingAssetError, ResolveError
from scenec.plan import plan_from_dict
from scenec.resolver import resolve_scene

from support import CATALOG, floor, make_plan, obj

TWO = {"entries": [
    {"catalog": "c", "filename": "a.obj", "extents": {"x": 1, "y": 2, "z": 3}, "license": "CC0", "author": "A"},
    {"catalog": "c", "filename": "b.obj", "extents": [0.5, 0.5, 0.5], "license": "CC BY 4.0", "density": 700},
]}


def test_two_entries_keep_their_licenses():
    cat = catalog_from_dict(TWO)
    assert sorted(cat) == ["c/a.obj", "c/b.obj"]
    assert (cat["c/a.obj"].license, cat["c/b.obj"].license) == ("CC0", "CC BY 4.0")
    assert cat["c/a.obj"].extents.as_tuple() == (1.0, 2.0, 3.0)
    assert cat["c/b.obj"].density == 700.0 and cat["c/a.obj"].native_frame == "z_up_native"


def test_text_path_and_dict_agree(tmp_path):
    p = tmp_path / "cat.json"
    p.write_text(json.dumps(TWO))
    assert dict(load_catalog(p)) == dict(load_catalog(json.dumps(TWO))) == dict(catalog_from_dict(TWO))


def test_dict_round_trip():
    cat = load_catalog(CATALOG)
    assert dict(catalog_from_dict(catalog_to_dict(cat))) == dict(cat)


@pytest.mark.parametrize("mutate, fragment", [
    (lambda d: d["entries"].append(dict(d["entries"][0])), "duplicate"),
    (lambda d: d["entries"][0].pop("extents"), "missing extents"),
    (lambda d: d["entries"][0].update(extents=[1, 2]), "three numbers"),
    (lambda d: d["entries"][0].update(extents=[1, 0, 2]), "positive"),
    (lambda d: d["entries"][0].update(colour="red"), "unknown fields"),
    (lambda d: d["entries"][0].pop("filename"), "missing filename"),
    (lambda d: d["entries"][1].update(density=-1), "density"),
    (lambda d: d.pop("entries"), "entries"),
])
def test_bad_catalogs_rejected(mutate, fragment):
    doc = json.loads(json.dumps(TWO))
    mutate(doc)
    with pytest.raises(CatalogError) as err:
        catalog_from_dict(doc)
    assert fragment in str(err.value)


def test_malformed_json_rejected():
    with pytest.raises(CatalogError):
        load_catalog("{oops")


def test_lookup_miss_names_the_key():
    plan = plan_from_dict({"objects": [obj("x", kind="asset", catalog="c", filename="zzz.obj")]})
    with pytest.raises(MissingAssetError) as err:
        catalog_from_dict(TWO).lookup(plan.object("x").construction)
    assert "c/zzz.obj" in str(err.value)
    with pytest.raises(MissingAssetError):
        EMPTY_CATALOG.lookup(plan.object("x").construction)


def test_wrapper_factory_flows_to_the_body(catalog):
    car = obj("car", kind="asset", catalog="chrono", filename="vehicle/polaris", ref="floor", rel="place_on",
              fixed=False)
    scene = resolve_scene(make_plan([floor(), car]), catalog)
    body = scene.bodies["car"]
    assert body.factory == "veh.Polaris(system)" and body.asset_type == "wrapper_vehicle"
    assert body.aabb.sizes == pytest.approx((3.0, 1.5, 1.9), abs=1e-12)


def test_unsupported_native_frame():
    doc = json.loads(json.dumps(TWO))
    doc["entries"][0]["native_frame"] = "y_up"
    item = obj("x", kind="asset", catalog="c", filename="a.obj")
    with pytest.raises(ResolveError) as err:
        resolve_scene(make_plan([item]), catalog_from_dict(doc))
    assert err.value.kind == "unsupported_native_frame"
