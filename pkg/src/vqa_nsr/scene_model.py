"""CLEVR vocabulary, object classes, scenes and prediction matrices.

Object classes are laid out as ``((size*8 + color)*2 + material)*3 + shape``
with every attribute enumerated in the order of :data:`SIZES`, :data:`COLORS`,
:data:`MATERIALS` and :data:`SHAPES`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

SIZES = ("small", "large")
COLORS = ("brown", "blue", "cyan", "gray", "green", "purple", "red", "yellow")
MATERIALS = ("metal", "rubber")
SHAPES = ("cube", "cylinder", "sphere")

ATTRIBUTES: dict[str, tuple[str, ...]] = {
    "size": SIZES,
    "color": COLORS,
    "material": MATERIALS,
    "shape": SHAPES,
}
NUM_CLASSES = len(SIZES) * len(COLORS) * len(MATERIALS) * len(SHAPES)

ALIASES = {
    "big": "large",
    "tiny": "small",
    "metallic": "metal",
    "shiny": "metal",
    "matte": "rubber",
    "block": "cube",
    "ball": "sphere",
}

# value -> attribute name, e.g. "red" -> "color"
VALUE_ATTRIBUTE = {v: attr for attr, values in ATTRIBUTES.items() for v in values}

# pixel half-extent of a synthesized box, by object size
BOX_HALF_EXTENT = {"small": 18.0, "large": 36.0}


class VocabularyError(ValueError):
    """Raised for attribute values outside the CLEVR vocabulary."""


class SceneFormatError(ValueError):
    """Raised for malformed scene or prediction files."""


def normalize_value(value: str, attribute: str | None = None) -> str:
    """Map an attribute value (or alias) to its canonical spelling."""
    v = ALIASES.get(str(value).strip().lower(), str(value).strip().lower())
    if attribute is None:
        if v not in VALUE_ATTRIBUTE:
            raise VocabularyError(f"unknown attribute value {value!r}")
    elif v not in ATTRIBUTES.get(attribute, ()):
        raise VocabularyError(f"unknown {attribute} value {value!r}")
    return v


@dataclass(frozen=True, order=True)
class ObjectClass:
    index: int

    def __post_init__(self):
        if not 0 <= self.index < NUM_CLASSES:
            raise VocabularyError(f"class index {self.index} out of range")

    @property
    def attrs(self) -> tuple[str, str, str, str]:
        """Attribute tuple in (size, shape, material, color) order."""
        return decode(self.index)

    @property
    def size(self) -> str:
        return self.attrs[0]

    @property
    def shape(self) -> str:
        return self.attrs[1]

    @property
    def material(self) -> str:
        return self.attrs[2]

    @property
    def color(self) -> str:
        return self.attrs[3]

    def attribute(self, name: str) -> str:
        return getattr(self, name)

    def __str__(self) -> str:
        return " ".join(self.attrs)


def class_index(size: str, shape: str, material: str, color: str) -> ObjectClass:
    try:
        s = SIZES.index(size)
        c = COLORS.index(color)
        m = MATERIALS.index(material)
        sh = SHAPES.index(shape)
    except ValueError:
        raise VocabularyError(
            f"unknown attribute tuple ({size}, {shape}, {material}, {color})"
        ) from None
    return ObjectClass(((s * len(COLORS) + c) * len(MATERIALS) + m) * len(SHAPES) + sh)


@lru_cache(maxsize=None)
def decode(index: int) -> tuple[str, str, str, str]:
    if not 0 <= index < NUM_CLASSES:
        raise VocabularyError(f"class index {index} out of range")
    rest, sh = divmod(index, len(SHAPES))
    rest, m = divmod(rest, len(MATERIALS))
    s, c = divmod(rest, len(COLORS))
    return SIZES[s], SHAPES[sh], MATERIALS[m], COLORS[c]


ALL_CLASSES = tuple(ObjectClass(i) for i in range(NUM_CLASSES))


def attribute_distance(a: ObjectClass, b: ObjectClass) -> int:
    """Number of attributes on which two classes differ (0..4)."""
    return sum(x != y for x, y in zip(a.attrs, b.attrs))


def asp_coord(x: float) -> int:
    """Pixel coordinate as an integer ASP term (scaled by 100, truncated)."""
    return math.trunc(x * 100)


@dataclass(frozen=True)
class BoundingBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise SceneFormatError(f"degenerate box {self.as_list()}")

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    def quantized(self) -> tuple[int, int, int, int]:
        return (asp_coord(self.x1), asp_coord(self.y1), asp_coord(self.x2), asp_coord(self.y2))

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def iou(self, other: BoundingBox) -> float:
        iw = min(self.x2, other.x2) - max(self.x1, other.x1)
        ih = min(self.y2, other.y2) - max(self.y1, other.y1)
        if iw <= 0 or ih <= 0:
            return 0.0
        inter = iw * ih
        return inter / (self.area + other.area - inter)


@dataclass(frozen=True)
class SceneObject:
    cls: ObjectClass
    box: BoundingBox


@dataclass(frozen=True)
class SceneGraph:
    image_id: str
    objects: tuple[SceneObject, ...] = ()


@dataclass(frozen=True)
class PredictionRow:
    scores: tuple[float, ...]
    box: BoundingBox
    box_confidence: float

    def __post_init__(self):
        if len(self.scores) != NUM_CLASSES:
            raise SceneFormatError(f"expected {NUM_CLASSES} scores, got {len(self.scores)}")
        if not all(0.0 <= s <= 1.0 for s in self.scores):
            raise SceneFormatError("class scores must lie in [0, 1]")
        if not 0.0 <= self.box_confidence <= 1.0:
            raise SceneFormatError("box confidence must lie in [0, 1]")

    @property
    def max_score(self) -> float:
        return max(self.scores)

    def argmax(self) -> ObjectClass:
        # first maximum, i.e. ties go to the lower class index
        best = max(range(NUM_CLASSES), key=lambda j: (self.scores[j], -j))
        return ObjectClass(best)


@dataclass(frozen=True)
class PredictionMatrix:
    image_id: str
    rows: tuple[PredictionRow, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.rows)


def apply_bbox_threshold(matrix: PredictionMatrix, t: float) -> PredictionMatrix:
    """Keep rows whose box confidence is at least ``t``, preserving order."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"bounding-box threshold {t} outside [0, 1]")
    rows = tuple(r for r in matrix.rows if r.box_confidence >= t)
    if len(rows) == len(matrix.rows):
        return matrix
    return PredictionMatrix(matrix.image_id, rows)


# --- loaders -----------------------------------------------------------------


def _read_json(source: str | Path | Mapping[str, Any]) -> Any:
    if isinstance(source, Mapping):
        return source
    try:
        text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SceneFormatError(f"malformed JSON: {e}") from e


def _object_box(obj: Mapping[str, Any], size: str, position: int) -> BoundingBox:
    # Explicit box first, then pixel centre, then 3D position, then a row layout.
    if "bbox" in obj:
        return BoundingBox(*map(float, obj["bbox"]))
    h = BOX_HALF_EXTENT[size]
    if "pixel_coords" in obj:
        px, py = float(obj["pixel_coords"][0]), float(obj["pixel_coords"][1])
    elif "3d_coords" in obj:
        x, y = float(obj["3d_coords"][0]), float(obj["3d_coords"][1])
        px, py = 240.0 + 40.0 * x, 160.0 + 40.0 * y
    else:
        px, py = 50.0 + 80.0 * position, 160.0
    return BoundingBox(px - h, py - h, px + h, py + h)


def scene_from_dict(scene: Mapping[str, Any], fallback_id: str = "0") -> SceneGraph:
    image_id = str(scene.get("image_filename", scene.get("image_index", fallback_id)))
    if "image_id" in scene:
        image_id = str(scene["image_id"])
    objects = []
    for pos, obj in enumerate(scene.get("objects", [])):
        try:
            size = normalize_value(obj["size"], "size")
            cls = class_index(
                size,
                normalize_value(obj["shape"], "shape"),
                normalize_value(obj["material"], "material"),
                normalize_value(obj["color"], "color"),
            )
        except KeyError as e:
            raise SceneFormatError(f"object missing attribute {e}") from None
        objects.append(SceneObject(cls, _object_box(obj, size, pos)))
    return SceneGraph(image_id, tuple(objects))


def load_scene_graphs(source: str | Path | Mapping[str, Any]) -> list[SceneGraph]:
    """Load a CLEVR ``scenes.json`` (path, JSON text, or parsed mapping)."""
    data = _read_json(source)
    if not isinstance(data, Mapping) or "scenes" not in data:
        raise SceneFormatError('scenes file needs a top-level "scenes" list')
    return [scene_from_dict(s, str(i)) for i, s in enumerate(data["scenes"])]


def scene_to_dict(scene: SceneGraph) -> dict[str, Any]:
    return {
        "image_id": scene.image_id,
        "objects": [
            {
                "size": o.cls.size,
                "color": o.cls.color,
                "material": o.cls.material,
                "shape": o.cls.shape,
                "bbox": o.box.as_list(),
            }
            for o in scene.objects
        ],
    }


def dump_scene_graphs(scenes: Iterable[SceneGraph]) -> dict[str, Any]:
    return {"scenes": [scene_to_dict(s) for s in scenes]}


def matrix_from_dict(data: Mapping[str, Any]) -> PredictionMatrix:
    try:
        rows = tuple(
            PredictionRow(
                tuple(float(s) for s in r["scores"]),
                BoundingBox(*map(float, r["box"])),
                float(r["box_confidence"]),
            )
            for r in data["rows"]
        )
        return PredictionMatrix(str(data["image_id"]), rows)
    except (KeyError, TypeError) as e:
        raise SceneFormatError(f"malformed prediction matrix: {e}") from None


def matrix_to_dict(matrix: PredictionMatrix) -> dict[str, Any]:
    return {
        "image_id": matrix.image_id,
        "rows": [
            {"scores": list(r.scores), "box": r.box.as_list(), "box_confidence": r.box_confidence}
            for r in matrix.rows
        ],
    }


def load_prediction_matrices(source: str | Path | Mapping[str, Any] | Sequence) -> list[PredictionMatrix]:
    """Load the prediction sidecar: one matrix object, a list, or ``{"predictions": [...]}``."""
    if isinstance(source, (str, Path)):
        try:
            data = json.loads(Path(source).read_text())
        except json.JSONDecodeError as e:
            raise SceneFormatError(f"malformed JSON: {e}") from e
    else:
        data = source
    if isinstance(data, Mapping) and "predictions" in data:
        data = data["predictions"]
    if isinstance(data, Mapping):
        data = [data]
    return [matrix_from_dict(d) for d in data]
