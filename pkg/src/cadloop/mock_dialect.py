"""Parser and interpreter for the mock macro dialect.

One command per line, ``#`` starts a comment, all lengths in millimetres:

    box <name> <l> <w> <h>
    sphere <name> <r>
    cylinder <name> <r> <h>
    move <name> <dx> <dy> <dz>
    union <name> <a> <b>
    cut <name> <a> <b>

Names are single-assignment; boolean operands are consumed by the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .errors import MacroEvalError, MacroParseError
from .scene import Primitive, SceneDescriptor, Shape, format_number, scene_from_primitives


@dataclass(frozen=True)
class BoxCmd:
    name: str
    length: float
    width: float
    height: float


@dataclass(frozen=True)
class SphereCmd:
    name: str
    radius: float


@dataclass(frozen=True)
class CylinderCmd:
    name: str
    radius: float
    height: float


@dataclass(frozen=True)
class MoveCmd:
    name: str
    dx: float
    dy: float
    dz: float


@dataclass(frozen=True)
class UnionCmd:
    name: str
    left: str
    right: str


@dataclass(frozen=True)
class CutCmd:
    name: str
    base: str
    tool: str


Command = Union[BoxCmd, SphereCmd, CylinderCmd, MoveCmd, UnionCmd, CutCmd]

_ARITY = {"box": 4, "sphere": 2, "cylinder": 3, "move": 4, "union": 3, "cut": 3}


def _number(token: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MacroParseError(line, f"non-numeric argument '{token}'") from None
    if not math.isfinite(value):
        raise MacroParseError(line, f"non-numeric argument '{token}'")
    return value


def _positive(value: float, what: str, line: int) -> float:
    if value <= 0:
        raise MacroParseError(line, f"{what} must be positive")
    return value


class _Scope:
    """Single-assignment name tracking with boolean-operand consumption."""

    def __init__(self) -> None:
        self.live: set[str] = set()
        self.ever: set[str] = set()

    def define(self, name: str, line: int) -> None:
        if name in self.ever:
            raise MacroParseError(line, f"duplicate name '{name}'")
        self.ever.add(name)
        self.live.add(name)

    def use(self, name: str, line: int) -> None:
        if name not in self.live:
            raise MacroParseError(line, f"undefined name '{name}'")

    def consume(self, name: str, line: int) -> None:
        self.use(name, line)
        self.live.remove(name)


def mock_parse(text: str) -> tuple[Command, ...]:
    """Parse macro text into a command tuple, or raise MacroParseError."""
    commands: list[Command] = []
    scope = _Scope()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        keyword = tokens[0]
        if keyword not in _ARITY:
            raise MacroParseError(lineno, f"unknown command '{keyword}'")
        args = tokens[1:]
        if len(args) != _ARITY[keyword]:
            raise MacroParseError(
                lineno, f"arity mismatch: {keyword} takes {_ARITY[keyword]} arguments, got {len(args)}"
            )
        name = args[0]
        if keyword == "box":
            l = _positive(_number(args[1], lineno), "length", lineno)
            w = _positive(_number(args[2], lineno), "width", lineno)
            h = _positive(_number(args[3], lineno), "height", lineno)
            scope.define(name, lineno)
            commands.append(BoxCmd(name, l, w, h))
        elif keyword == "sphere":
            r = _positive(_number(args[1], lineno), "radius", lineno)
            scope.define(name, lineno)
            commands.append(SphereCmd(name, r))
        elif keyword == "cylinder":
            r = _positive(_number(args[1], lineno), "radius", lineno)
            h = _positive(_number(args[2], lineno), "height", lineno)
            scope.define(name, lineno)
            commands.append(CylinderCmd(name, r, h))
        elif keyword == "move":
            scope.use(name, lineno)
            commands.append(MoveCmd(name, *(_number(a, lineno) for a in args[1:])))
        else:  # union / cut
            left, right = args[1], args[2]
            scope.consume(left, lineno)
            scope.consume(right, lineno)
            scope.define(name, lineno)
            cls = UnionCmd if keyword == "union" else CutCmd
            commands.append(cls(name, left, right))  # type: ignore[arg-type]
    if not commands:
        raise MacroParseError(1, "empty macro")
    return tuple(commands)


def pretty_print(commands: tuple[Command, ...]) -> str:
    """Inverse of mock_parse on valid ASTs."""
    lines = []
    for cmd in commands:
        if isinstance(cmd, BoxCmd):
            lines.append(f"box {cmd.name} {format_number(cmd.length)} {format_number(cmd.width)} {format_number(cmd.height)}")
        elif isinstance(cmd, SphereCmd):
            lines.append(f"sphere {cmd.name} {format_number(cmd.radius)}")
        elif isinstance(cmd, CylinderCmd):
            lines.append(f"cylinder {cmd.name} {format_number(cmd.radius)} {format_number(cmd.height)}")
        elif isinstance(cmd, MoveCmd):
            lines.append(f"move {cmd.name} {format_number(cmd.dx)} {format_number(cmd.dy)} {format_number(cmd.dz)}")
        elif isinstance(cmd, UnionCmd):
            lines.append(f"union {cmd.name} {cmd.left} {cmd.right}")
        else:
            lines.append(f"cut {cmd.name} {cmd.base} {cmd.tool}")
    return "\n".join(lines) + "\n"


@dataclass
class _Obj:
    primitives: list[Primitive]
    volume: float
    approximate: bool

    def single_box(self) -> Primitive | None:
        if len(self.primitives) == 1 and self.primitives[0].shape is Shape.BOX:
            return self.primitives[0]
        return None


def _box_overlap(a: Primitive, b: Primitive) -> float:
    """Overlap volume of two axis-aligned boxes."""
    (ax0, ay0, az0), (ax1, ay1, az1) = a.bbox()
    (bx0, by0, bz0), (bx1, by1, bz1) = b.bbox()
    dx = min(ax1, bx1) - max(ax0, bx0)
    dy = min(ay1, by1) - max(ay0, by0)
    dz = min(az1, bz1) - max(az0, bz0)
    if dx <= 0 or dy <= 0 or dz <= 0:
        return 0.0
    return dx * dy * dz


def mock_eval(commands: tuple[Command, ...]) -> SceneDescriptor:
    """Evaluate a parsed macro into a canonical scene descriptor.

    Volumes are exact for primitives and for box-box unions/cuts; any other
    boolean combination keeps the plain sum (or base volume for cut) and sets
    the approximate flag.
    """
    env: dict[str, _Obj] = {}
    for cmd in commands:
        if isinstance(cmd, BoxCmd):
            prim = Primitive(Shape.BOX, (cmd.length, cmd.width, cmd.height))
            env[cmd.name] = _Obj([prim], prim.volume(), False)
        elif isinstance(cmd, SphereCmd):
            prim = Primitive(Shape.SPHERE, (cmd.radius,))
            env[cmd.name] = _Obj([prim], prim.volume(), False)
        elif isinstance(cmd, CylinderCmd):
            prim = Primitive(Shape.CYLINDER, (cmd.radius, cmd.height))
            env[cmd.name] = _Obj([prim], prim.volume(), False)
        elif isinstance(cmd, MoveCmd):
            obj = env[cmd.name]
            obj.primitives = [p.translated(cmd.dx, cmd.dy, cmd.dz) for p in obj.primitives]
        elif isinstance(cmd, UnionCmd):
            a, b = env.pop(cmd.left), env.pop(cmd.right)
            tag = f"union:{cmd.name}"
            prims = [p.tagged(tag) for p in a.primitives + b.primitives]
            box_a, box_b = a.single_box(), b.single_box()
            if box_a is not None and box_b is not None:
                volume = a.volume + b.volume - _box_overlap(box_a, box_b)
                approx = False
            else:
                volume = a.volume + b.volume
                approx = True
            env[cmd.name] = _Obj(prims, volume, a.approximate or b.approximate or approx)
        else:  # CutCmd
            a, b = env.pop(cmd.base), env.pop(cmd.tool)
            tag = f"cut:{cmd.name}"
            prims = [p.tagged(tag) for p in a.primitives]
            box_a, box_b = a.single_box(), b.single_box()
            if box_a is not None and box_b is not None:
                volume = max(a.volume - _box_overlap(box_a, box_b), 0.0)
                approx = False
            else:
                volume = a.volume
                approx = True
            env[cmd.name] = _Obj(prims, volume, a.approximate or b.approximate or approx)

    primitives: list[Primitive] = []
    total = 0.0
    approximate = False
    for obj in env.values():
        primitives.extend(obj.primitives)
        total += obj.volume
        approximate = approximate or obj.approximate

    if not math.isfinite(total) or any(
        not all(math.isfinite(c) for c in p.position) or not all(math.isfinite(v) for v in p.params)
        for p in primitives
    ):
        raise MacroEvalError("numeric overflow while evaluating macro")

    return scene_from_primitives(primitives, total_volume=total, approximate_volume=approximate)
