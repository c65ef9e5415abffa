"""Canonical scene descriptors: the deterministic stand-in for a rendered image.

A scene is a multiset of geometric primitives with millimetre parameters and
positions.  Canonical ordering makes descriptors comparable regardless of the
order the macro created the objects in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable

Vec3 = tuple[float, float, float]


class Shape(str, Enum):
    BOX = "box"
    SPHERE = "sphere"
    CYLINDER = "cylinder"


def format_number(x: float) -> str:
    """Render a float the way the mock dialect prints it: '10' not '10.0'."""
    if math.isfinite(x) and x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


@dataclass(frozen=True)
class Primitive:
    """One solid with its reference position.

    ``position`` is the min corner for boxes, the center for spheres, and the
    base-circle center for cylinders (axis +z).  ``ops`` records the boolean
    operations this primitive passed through, e.g. ``("union:u1",)``.
    """

    shape: Shape
    params: tuple[float, ...]
    position: Vec3 = (0.0, 0.0, 0.0)
    ops: tuple[str, ...] = ()

    def bbox(self) -> tuple[Vec3, Vec3]:
        x, y, z = self.position
        if self.shape is Shape.BOX:
            l, w, h = self.params
            return (x, y, z), (x + l, y + w, z + h)
        if self.shape is Shape.SPHERE:
            (r,) = self.params
            return (x - r, y - r, z - r), (x + r, y + r, z + r)
        r, h = self.params
        return (x - r, y - r, z), (x + r, y + r, z + h)

    def volume(self) -> float:
        if self.shape is Shape.BOX:
            l, w, h = self.params
            return l * w * h
        if self.shape is Shape.SPHERE:
            (r,) = self.params
            return (4.0 / 3.0) * math.pi * r**3
        r, h = self.params
        return math.pi * r**2 * h

    def signature(self) -> tuple:
        """Identity used by the stub scorer: params at 3 decimals, position at 1."""
        return (
            self.shape.value,
            tuple(round(p, 3) for p in self.params),
            tuple(round(c, 1) for c in self.position),
        )

    def sort_key(self) -> tuple:
        return (
            self.shape.value,
            tuple(round(p, 3) for p in self.params),
            self.position,
        )

    def translated(self, dx: float, dy: float, dz: float) -> "Primitive":
        x, y, z = self.position
        return Primitive(self.shape, self.params, (x + dx, y + dy, z + dz), self.ops)

    def tagged(self, op: str) -> "Primitive":
        return Primitive(self.shape, self.params, self.position, self.ops + (op,))

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "shape": self.shape.value,
            "params": list(self.params),
            "position": list(self.position),
        }
        if self.ops:
            d["ops"] = list(self.ops)
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Primitive":
        pos = data.get("position", [0.0, 0.0, 0.0])
        return cls(
            shape=Shape(data["shape"]),
            params=tuple(float(p) for p in data["params"]),
            position=(float(pos[0]), float(pos[1]), float(pos[2])),
            ops=tuple(data.get("ops", ())),
        )


@dataclass(frozen=True)
class SceneDescriptor:
    """Canonically ordered multiset of primitives with bbox and total volume."""

    primitives: tuple[Primitive, ...]
    bbox: tuple[Vec3, Vec3] | None
    total_volume: float
    approximate_volume: bool = False

    def signatures(self) -> list[tuple]:
        return [p.signature() for p in self.primitives]

    def to_dict(self) -> dict[str, Any]:
        return {
            "primitives": [p.to_dict() for p in self.primitives],
            "bbox": None if self.bbox is None else {"min": list(self.bbox[0]), "max": list(self.bbox[1])},
            "total_volume": self.total_volume,
            "approximate_volume": self.approximate_volume,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SceneDescriptor":
        prims = [Primitive.from_dict(p) for p in data.get("primitives", [])]
        if "total_volume" in data:
            scene = scene_from_primitives(
                prims,
                total_volume=float(data["total_volume"]),
                approximate_volume=bool(data.get("approximate_volume", False)),
            )
        else:
            scene = scene_from_primitives(prims, approximate_volume=bool(data.get("approximate_volume", False)))
        return scene


def bbox_union(boxes: Iterable[tuple[Vec3, Vec3]]) -> tuple[Vec3, Vec3] | None:
    boxes = list(boxes)
    if not boxes:
        return None
    mins = tuple(min(b[0][i] for b in boxes) for i in range(3))
    maxs = tuple(max(b[1][i] for b in boxes) for i in range(3))
    return mins, maxs  # type: ignore[return-value]


def canonicalize(scene: SceneDescriptor) -> SceneDescriptor:
    """Sort primitives into canonical order; idempotent."""
    ordered = tuple(sorted(scene.primitives, key=Primitive.sort_key))
    return SceneDescriptor(ordered, scene.bbox, scene.total_volume, scene.approximate_volume)


def scene_from_primitives(
    primitives: Iterable[Primitive],
    total_volume: float | None = None,
    approximate_volume: bool = False,
) -> SceneDescriptor:
    """Build a canonical descriptor; volume defaults to the plain sum."""
    prims = tuple(sorted(primitives, key=Primitive.sort_key))
    volume = total_volume if total_volume is not None else sum(p.volume() for p in prims)
    return SceneDescriptor(
        primitives=prims,
        bbox=bbox_union(p.bbox() for p in prims),
        total_volume=volume,
        approximate_volume=approximate_volume,
    )
