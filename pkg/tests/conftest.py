import json
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


def box_annotations(sizes_by_class):
    """COCO document from ``{class_id: [((w, h), repeat), ...]}``, one image per class."""
    anns, next_id = [], 1
    for cid, boxes in sizes_by_class.items():
        for (w, h), reps in boxes:
            for _ in range(reps):
                anns.append({"id": next_id, "image_id": cid, "category_id": cid,
                             "bbox": [0, 0, w, h]})
                next_id += 1
    return {
        "images": [{"id": cid} for cid in sizes_by_class],
        "categories": [{"id": cid, "name": f"c{cid}"} for cid in sizes_by_class],
        "annotations": anns,
    }


@pytest.fixture
def repeated_coco(tmp_path):
    doc = box_annotations({
        1: [((4, 4), 30), ((4, 5), 20), ((8, 8), 5), ((20, 20), 1)],
        2: [((10, 10), 12), ((10, 30), 7), ((40, 40), 2)],
    })
    path = tmp_path / "repeated.json"
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def split_coco(tmp_path):
    # three instances per band under the 32^2 / 96^2 thresholds
    sizes = [(10, 10), (20, 25), (1023, 1), (32, 32), (50, 100), (9215, 1),
             (96, 96), (100, 200), (1000, 100)]
    doc = {
        "images": [{"id": 1}],
        "categories": [{"id": 1, "name": "obj"}],
        "annotations": [{"id": i + 1, "image_id": 1, "category_id": 1, "bbox": [0, 0, w, h]}
                        for i, (w, h) in enumerate(sizes)],
    }
    path = tmp_path / "split.json"
    path.write_text(json.dumps(doc))
    return path


_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


class _Verdict:
    def __init__(self, sink, number, title, limit):
        self.sink, self.number, self.title, self.limit = sink, number, title, limit
        self.detail = ""

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        timing = f"{elapsed:.2f}s" + (f" (limit {self.limit:g}s)" if self.limit else "")
        slow = self.limit is not None and elapsed > self.limit
        ok = exc_type is None and not slow
        why = self.detail if exc_type is None else f"{exc_type.__name__}: {exc}".splitlines()[0]
        if slow and exc_type is None:
            why = f"too slow; {why}"
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {self.number:2d} {self.title}: {why} [{timing}]"
        self.sink.append(line)
        print(line)
        if slow and exc_type is None:
            raise AssertionError(line)
        return False


@pytest.fixture
def verdict(request):
    """Context manager recording one PASS/FAIL line per acceptance criterion."""
    sink = request.config.stash[_VERDICTS]
    return lambda number, title, limit=None: _Verdict(sink, number, title, limit)
