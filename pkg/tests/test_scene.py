from __future__ import annotations

import pytest

from cadloop.scene import (
    Primitive,
    SceneDescriptor,
    Shape,
    bbox_union,
    canonicalize,
    format_number,
    scene_from_primitives,
)


def test_format_number_drops_integral_suffix():
    assert format_number(10.0) == "10"
    assert format_number(7.5) == "7.5"
    assert format_number(-3.0) == "-3"


def test_box_bbox_uses_min_corner():
    prim = Primitive(Shape.BOX, (10.0, 20.0, 30.0), (1.0, 2.0, 3.0))
    assert prim.bbox() == ((1.0, 2.0, 3.0), (11.0, 22.0, 33.0))


def test_sphere_bbox_centered():
    prim = Primitive(Shape.SPHERE, (8.0,), (0.0, 0.0, 8.0))
    assert prim.bbox() == ((-8.0, -8.0, 0.0), (8.0, 8.0, 16.0))


def test_cylinder_bbox_base_center():
    prim = Primitive(Shape.CYLINDER, (5.0, 20.0), (10.0, 10.0, 0.0))
    assert prim.bbox() == ((5.0, 5.0, 0.0), (15.0, 15.0, 20.0))


def test_signature_rounding():
    a = Primitive(Shape.BOX, (10.0001, 10.0, 10.0), (0.04, 0.0, 0.0))
    b = Primitive(Shape.BOX, (10.0, 10.0, 10.0), (0.0, 0.0, 0.0))
    assert a.signature() == b.signature()
    far = Primitive(Shape.BOX, (10.0, 10.0, 10.0), (0.4, 0.0, 0.0))
    assert far.signature() != b.signature()


def test_bbox_union_contains_every_member():
    boxes = [((0, 0, 0), (1, 1, 1)), ((-5, 2, 0), (0, 3, 9))]
    lo, hi = bbox_union(boxes)
    assert lo == (-5, 0, 0)
    assert hi == (1, 3, 9)
    assert bbox_union([]) is None


def test_canonicalize_sorts_and_is_idempotent():
    sphere = Primitive(Shape.SPHERE, (8.0,))
    box = Primitive(Shape.BOX, (10.0, 10.0, 10.0), (-5.0, -5.0, 8.0))
    scene = SceneDescriptor((sphere, box), None, 0.0)
    once = canonicalize(scene)
    assert [p.shape for p in once.primitives] == [Shape.BOX, Shape.SPHERE]
    assert canonicalize(once) == once


def test_scene_round_trips_through_dict():
    scene = scene_from_primitives(
        [
            Primitive(Shape.BOX, (10.0, 10.0, 10.0), (-5.0, -5.0, 8.0), ("union:m",)),
            Primitive(Shape.SPHERE, (8.0,)),
        ],
        total_volume=2500.0,
        approximate_volume=True,
    )
    loaded = SceneDescriptor.from_dict(scene.to_dict())
    assert loaded == scene


def test_scene_from_primitives_defaults_volume_to_sum():
    prims = [Primitive(Shape.BOX, (2.0, 3.0, 4.0)), Primitive(Shape.BOX, (1.0, 1.0, 1.0))]
    scene = scene_from_primitives(prims)
    assert scene.total_volume == pytest.approx(25.0)
    assert scene.bbox == ((0.0, 0.0, 0.0), (2.0, 3.0, 4.0))
