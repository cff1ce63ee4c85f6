"""Annotation parsing (COCO subset, DOTA, VisDrone-DET) and pixel areas.

Everything is normalized into a :class:`Dataset` of :class:`ObjectInstance`
records. Object size is the pixel area of the annotated shape: ``w * h`` for
axis-aligned boxes and the shoelace area for polygons.
"""

from __future__ import annotations

import json
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from aruba.errors import ParseError, RecordError, SchemaError

log = logging.getLogger(__name__)

FORMATS = ("coco", "dota", "visdrone")

VISDRONE_CATEGORIES = {
    0: "ignored regions",
    1: "pedestrian",
    2: "people",
    3: "bicycle",
    4: "car",
    5: "van",
    6: "truck",
    7: "tricycle",
    8: "awning-tricycle",
    9: "bus",
    10: "motor",
    11: "others",
}
VISDRONE_IGNORED = frozenset({0, 11})

_DIGITS = re.compile(r"(\d+)")


def natural_key(text: str):
    """Sort key that orders embedded integers numerically ("a2" < "a10")."""
    return tuple((0, int(tok), "") if tok.isdigit() else (1, 0, tok)
                 for tok in _DIGITS.split(text) if tok)


@dataclass(frozen=True)
class ObjectInstance:
    """One annotated object.

    ``geometry`` is ``"box"`` with ``coords == (x, y, w, h)`` or ``"polygon"``
    with ``coords == (x1, y1, x2, y2, ...)``.
    """

    instance_id: str
    image_id: str
    class_id: int
    geometry: str
    coords: tuple
    area: float
    ignored: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def vertices(self) -> list[tuple[float, float]]:
        if self.geometry == "polygon":
            c = self.coords
            return [(c[i], c[i + 1]) for i in range(0, len(c), 2)]
        x, y, w, h = self.coords
        return [(x, y), (x + w, y), (x + w, y + h), (x, y + h)]

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        if self.geometry == "box":
            return tuple(self.coords)
        xs = self.coords[0::2]
        ys = self.coords[1::2]
        return (min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys))


@dataclass(frozen=True)
class Dataset:
    instances: tuple
    categories: dict
    source_format: str
    provenance: tuple = ()
    warnings: tuple = ()
    images: tuple = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.instances, key=lambda o: natural_key(o.instance_id)))
        object.__setattr__(self, "instances", ordered)
        seen = set()
        for inst in ordered:
            if inst.instance_id in seen:
                raise RecordError(f"duplicate instance_id {inst.instance_id!r}",
                                  annotation_id=inst.instance_id)
            seen.add(inst.instance_id)
            if inst.class_id not in self.categories:
                raise SchemaError(f"class_id {inst.class_id} missing from categories",
                                  key="category_id", annotation_id=inst.instance_id)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def retained(self, include_ignored: bool = False) -> list[ObjectInstance]:
        return [o for o in self.instances if include_ignored or not o.ignored]

    def subset(self, instances: Iterable[ObjectInstance]) -> "Dataset":
        instances = tuple(instances)
        used = {o.image_id for o in instances}
        images = tuple(im for im in self.images if str(im.get("id")) in used)
        return Dataset(instances, dict(self.categories), self.source_format,
                       self.provenance, (), images)


# ---------------------------------------------------------------- geometry

def polygon_area(vertices: Sequence[tuple[float, float]]) -> float:
    """Absolute shoelace area of a simple or self-intersecting polygon."""
    pts = [(float(x), float(y)) for x, y in vertices]
    if len(pts) < 3:
        raise ValueError("polygon needs at least 3 vertices")
    if not all(math.isfinite(v) for p in pts for v in p):
        raise ValueError(f"non-finite polygon coordinate in {pts}")
    acc = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
        acc += x0 * y1 - x1 * y0
    return abs(acc) / 2.0


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _segments_cross(a, b, c, d) -> bool:
    d1, d2 = _orient(c, d, a), _orient(c, d, b)
    d3, d4 = _orient(a, b, c), _orient(a, b, d)
    return d1 * d2 < 0 and d3 * d4 < 0


def is_self_intersecting(vertices: Sequence[tuple[float, float]]) -> bool:
    """True if two non-adjacent edges of the polygon properly cross."""
    n = len(vertices)
    edges = [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(*edges[i], *edges[j]):
                return True
    return False


# ---------------------------------------------------------------- COCO

def _byte_offset(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


def _require(obj: dict, key: str, ann_id, path):
    if key not in obj:
        raise SchemaError(f"missing required key {key!r} (annotation id {ann_id})",
                          key=key, annotation_id=ann_id, path=path)
    return obj[key]


def parse_coco(document: str | bytes, path: str = "<string>") -> Dataset:
    """Parse a COCO-style detection document.

    A non-empty polygon ``segmentation`` takes precedence over ``bbox`` for
    the area (first ring only); RLE segmentations fall back to the box.
    """
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        off = _byte_offset(document, exc.pos)
        raise ParseError(f"{path}: malformed JSON at byte {off}: {exc.msg}",
                         path=path, byte_offset=off) from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be an object", key="<root>", path=path)
    for key in ("images", "annotations", "categories"):
        if not isinstance(doc.get(key), list):
            raise SchemaError(f"{path}: missing required array {key!r}", key=key, path=path)

    categories = {}
    for cat in doc["categories"]:
        cid = _require(cat, "id", None, path)
        categories[int(cid)] = str(cat.get("name", cid))

    warnings = []
    instances = []
    for ann in doc["annotations"]:
        ann_id = _require(ann, "id", None, path)
        image_id = _require(ann, "image_id", ann_id, path)
        cat_id = _require(ann, "category_id", ann_id, path)
        bbox = _require(ann, "bbox", ann_id, path)
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise SchemaError(f"annotation {ann_id}: bbox must be [x, y, w, h]",
                              key="bbox", annotation_id=ann_id, path=path)
        try:
            x, y, w, h = (float(v) for v in bbox)
        except (TypeError, ValueError):
            raise RecordError(f"annotation {ann_id}: non-numeric bbox {bbox}",
                              path=path, annotation_id=ann_id) from None
        if not all(math.isfinite(v) for v in (x, y, w, h)):
            raise RecordError(f"annotation {ann_id}: non-finite bbox {bbox}",
                              path=path, annotation_id=ann_id)
        if w < 0 or h < 0:
            raise RecordError(f"annotation {ann_id}: negative box size w={w} h={h}",
                              path=path, annotation_id=ann_id)
        if int(cat_id) not in categories:
            raise SchemaError(f"annotation {ann_id}: unknown category_id {cat_id}",
                              key="category_id", annotation_id=ann_id, path=path)

        seg = ann.get("segmentation")
        ring = seg[0] if isinstance(seg, list) and seg and isinstance(seg[0], list) else None
        extra = {"bbox": [x, y, w, h]}
        if ring and len(ring) >= 6:
            try:
                coords = tuple(float(v) for v in ring)
                area = polygon_area(list(zip(coords[0::2], coords[1::2])))
            except (TypeError, ValueError) as exc:
                raise RecordError(f"annotation {ann_id}: bad segmentation ({exc})",
                                  path=path, annotation_id=ann_id) from None
            geometry = "polygon"
        else:
            coords, area, geometry = (x, y, w, h), w * h, "box"
        ignored = bool(ann.get("iscrowd", 0))
        if area <= 0:
            warnings.append(f"annotation {ann_id}: zero area, flagged ignored")
            ignored = True
        instances.append(ObjectInstance(
            instance_id=str(ann_id), image_id=str(image_id), class_id=int(cat_id),
            geometry=geometry, coords=coords, area=area, ignored=ignored, extra=extra))

    images = tuple(dict(im) for im in doc["images"])
    for msg in warnings:
        log.warning(msg)
    return Dataset(tuple(instances), categories, "coco", (path,), tuple(warnings), images)


def load_coco(path: str | Path) -> Dataset:
    path = Path(path)
    return parse_coco(path.read_bytes(), str(path))


# ---------------------------------------------------------------- text formats

def _expand(paths: Iterable[str | Path]) -> list[Path]:
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(sorted(p.glob("*.txt"), key=lambda q: natural_key(q.name)))
        else:
            out.append(p)
    return out


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line:
            yield lineno, line


def _dota_records(text: str, stem: str, path: str) -> tuple[list, list]:
    records, warnings = [], []
    for lineno, line in _lines(text):
        if line.startswith(("imagesource:", "gsd:")):
            continue
        tokens = line.split()
        if len(tokens) != 10:
            raise RecordError(f"{path}:{lineno}: expected 10 tokens, got {len(tokens)}",
                              path=path, line=lineno)
        try:
            coords = tuple(float(t) for t in tokens[:8])
            difficult = int(tokens[9])
        except ValueError:
            raise RecordError(f"{path}:{lineno}: non-numeric field in {line!r}",
                              path=path, line=lineno) from None
        if not all(math.isfinite(v) for v in coords):
            raise RecordError(f"{path}:{lineno}: non-finite coordinate", path=path, line=lineno)
        verts = list(zip(coords[0::2], coords[1::2]))
        area = polygon_area(verts)
        ignored = difficult == 1
        if is_self_intersecting(verts):
            warnings.append(f"{path}:{lineno}: self-intersecting quadrilateral")
        if area <= 0:
            warnings.append(f"{path}:{lineno}: zero-area polygon, flagged ignored")
            ignored = True
        records.append(dict(instance_id=f"{stem}#{lineno}", image_id=stem, name=tokens[8],
                            coords=coords, area=area, ignored=ignored,
                            extra={"difficult": difficult}))
    return records, warnings


def _read_all(paths: list[Path], jobs: int) -> list[str]:
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(lambda p: p.read_text(encoding="utf-8"), paths))
    return [p.read_text(encoding="utf-8") for p in paths]


def _build_dota(items: list[tuple[str, str, str]], provenance: Sequence[str]) -> Dataset:
    records, warnings = [], []
    for stem, path, text in items:
        recs, warns = _dota_records(text, stem, path)
        records.extend(recs)
        warnings.extend(warns)
    names = sorted({r["name"] for r in records})
    ids = {name: i for i, name in enumerate(names)}
    instances = tuple(
        ObjectInstance(r["instance_id"], r["image_id"], ids[r["name"]], "polygon",
                       r["coords"], r["area"], r["ignored"], r["extra"])
        for r in records)
    for msg in warnings:
        log.warning(msg)
    return Dataset(instances, {i: n for n, i in ids.items()}, "dota",
                   tuple(provenance), tuple(warnings))


def parse_dota_texts(texts: dict[str, str]) -> Dataset:
    """Parse DOTA annotations given as ``{image_stem: file_text}``."""
    return _build_dota([(s, s, texts[s]) for s in sorted(texts, key=natural_key)], ())


def parse_dota(paths: Iterable[str | Path], jobs: int = 1) -> Dataset:
    files = _expand(paths)
    texts = _read_all(files, jobs)
    items = [(f.stem, str(f), t) for f, t in zip(files, texts)]
    return _build_dota(items, [str(f) for f in files])


def _visdrone_records(text: str, stem: str, path: str) -> list:
    records = []
    for lineno, line in _lines(text):
        fields = [f.strip() for f in line.rstrip(",").split(",")]
        if len(fields) != 8:
            raise RecordError(f"{path}:{lineno}: expected 8 fields, got {len(fields)}",
                              path=path, line=lineno)
        try:
            left, top, width, height = (float(v) for v in fields[:4])
            score, category, truncation, occlusion = (int(float(v)) for v in fields[4:])
        except ValueError:
            raise RecordError(f"{path}:{lineno}: non-numeric field in {line!r}",
                              path=path, line=lineno) from None
        if not (width > 0 and height > 0) or not math.isfinite(width * height):
            raise RecordError(f"{path}:{lineno}: width/height must be positive",
                              path=path, line=lineno)
        records.append(ObjectInstance(
            instance_id=f"{stem}#{lineno}", image_id=stem, class_id=category,
            geometry="box", coords=(left, top, width, height), area=width * height,
            ignored=category in VISDRONE_IGNORED,
            extra={"score": score, "truncation": truncation, "occlusion": occlusion}))
    return records


def _build_visdrone(items: list[tuple[str, str, str]], provenance: Sequence[str]) -> Dataset:
    instances = []
    categories = dict(VISDRONE_CATEGORIES)
    for stem, path, text in items:
        for inst in _visdrone_records(text, stem, path):
            categories.setdefault(inst.class_id, str(inst.class_id))
            instances.append(inst)
    return Dataset(tuple(instances), categories, "visdrone", tuple(provenance))


def parse_visdrone_texts(texts: dict[str, str]) -> Dataset:
    return _build_visdrone([(s, s, texts[s]) for s in sorted(texts, key=natural_key)], ())


def parse_visdrone(paths: Iterable[str | Path], jobs: int = 1) -> Dataset:
    files = _expand(paths)
    texts = _read_all(files, jobs)
    items = [(f.stem, str(f), t) for f, t in zip(files, texts)]
    return _build_visdrone(items, [str(f) for f in files])


# ---------------------------------------------------------------- canonical dump

def dataset_to_dict(ds: Dataset) -> dict:
    return {
        "source_format": ds.source_format,
        "provenance": list(ds.provenance),
        "categories": {str(k): v for k, v in sorted(ds.categories.items())},
        "images": list(ds.images),
        "warnings": list(ds.warnings),
        "instances": [
            {"instance_id": o.instance_id, "image_id": o.image_id, "class_id": o.class_id,
             "geometry": o.geometry, "coords": list(o.coords), "area": o.area,
             "ignored": o.ignored, "extra": o.extra}
            for o in ds.instances
        ],
    }


def dataset_from_dict(doc: dict) -> Dataset:
    try:
        instances = tuple(
            ObjectInstance(d["instance_id"], d["image_id"], int(d["class_id"]), d["geometry"],
                           tuple(d["coords"]), d["area"], bool(d["ignored"]), dict(d["extra"]))
            for d in doc["instances"])
        return Dataset(instances, {int(k): v for k, v in doc["categories"].items()},
                       doc["source_format"], tuple(doc["provenance"]),
                       tuple(doc.get("warnings", ())), tuple(doc.get("images", ())))
    except KeyError as exc:
        raise SchemaError(f"canonical dump missing key {exc.args[0]!r}",
                          key=str(exc.args[0])) from None


def dumps_dataset(ds: Dataset) -> str:
    return json.dumps(dataset_to_dict(ds), sort_keys=True, indent=1) + "\n"


def loads_dataset(text: str, path: str = "<string>") -> Dataset:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        off = _byte_offset(text, exc.pos)
        raise ParseError(f"{path}: malformed JSON at byte {off}: {exc.msg}",
                         path=path, byte_offset=off) from None
    return dataset_from_dict(doc)


# ---------------------------------------------------------------- loading / export

def load_dataset(paths: Sequence[str | Path], fmt: str, jobs: int = 1) -> Dataset:
    """Load annotations in ``fmt`` (``coco``, ``dota``, ``visdrone`` or ``dump``)."""
    paths = list(paths)
    if fmt in ("coco", "dump"):
        if len(paths) != 1:
            raise ValueError(f"{fmt} input takes exactly one file, got {len(paths)}")
        p = Path(paths[0])
        if fmt == "dump":
            return loads_dataset(p.read_text(encoding="utf-8"), str(p))
        return load_coco(p)
    if fmt == "dota":
        return parse_dota(paths, jobs)
    if fmt == "visdrone":
        return parse_visdrone(paths, jobs)
    raise ValueError(f"unknown format {fmt!r}")


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _coco_id(v: str):
    return int(v) if v.lstrip("-").isdigit() else v


def to_coco(ds: Dataset) -> dict:
    images = list(ds.images) or [{"id": _coco_id(i)} for i in
                                 sorted({o.image_id for o in ds.instances}, key=natural_key)]
    annotations = []
    for idx, o in enumerate(ds.instances, start=1):
        ann_id = _coco_id(o.instance_id) if o.instance_id.isdigit() else idx
        ann = {"id": ann_id, "image_id": _coco_id(o.image_id), "category_id": o.class_id,
               "bbox": list(o.extra.get("bbox", o.bbox)), "area": o.area,
               "iscrowd": int(o.ignored)}
        if o.geometry == "polygon":
            ann["segmentation"] = [list(o.coords)]
        annotations.append(ann)
    categories = [{"id": k, "name": v} for k, v in sorted(ds.categories.items())]
    return {"images": images, "annotations": annotations, "categories": categories}


def _dota_line(o: ObjectInstance, name: str) -> str:
    pts = o.vertices
    if len(pts) != 4:
        x, y, w, h = o.bbox
        pts = [(x, y), (x + w, y), (x + w, y + h), (x, y + h)]
    coords = " ".join(_num(v) for p in pts for v in p)
    return f"{coords} {name} {int(o.ignored)}"


def _visdrone_line(o: ObjectInstance) -> str:
    x, y, w, h = o.bbox
    e = o.extra
    return ",".join([_num(x), _num(y), _num(w), _num(h), str(e.get("score", 1)),
                     str(o.class_id), str(e.get("truncation", 0)), str(e.get("occlusion", 0))])


def write_dataset(ds: Dataset, dest: str | Path, fmt: str | None = None) -> list[Path]:
    """Export ``ds`` in an annotation format; returns the files written.

    COCO and canonical dumps go to the single file ``dest``; DOTA and VisDrone
    go to ``dest`` as a directory of per-image ``.txt`` files.
    """
    fmt = fmt or ds.source_format
    dest = Path(dest)
    if fmt in ("coco", "dump"):
        dest.parent.mkdir(parents=True, exist_ok=True)
        text = dumps_dataset(ds) if fmt == "dump" else \
            json.dumps(to_coco(ds), sort_keys=True, indent=1) + "\n"
        dest.write_text(text, encoding="utf-8", newline="\n")
        return [dest]
    if fmt not in ("dota", "visdrone"):
        raise ValueError(f"unknown format {fmt!r}")
    dest.mkdir(parents=True, exist_ok=True)
    by_image: dict[str, list[str]] = {}
    for o in ds.instances:
        line = _dota_line(o, ds.categories[o.class_id]) if fmt == "dota" else _visdrone_line(o)
        by_image.setdefault(o.image_id, []).append(line)
    written = []
    for image_id in sorted(by_image, key=natural_key):
        path = dest / f"{image_id}.txt"
        path.write_text("\n".join(by_image[image_id]) + "\n", encoding="utf-8", newline="\n")
        written.append(path)
    return written
