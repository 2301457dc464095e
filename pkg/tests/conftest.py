import pytest

from multicue.corpus import BBox, Corpus, FaceComponent, FaceDetection, Instance, PhotoMeta


def face(x=0.0, y=0.0, w=10.0, h=10.0, score=0.9, component="f0"):
    return FaceDetection(BBox(x, y, w, h), score, FaceComponent(component))


@pytest.fixture
def small_corpus():
    """3 photos, 5 instances: one background person, one missing timestamp, one NFD."""
    photos = {
        "p1": PhotoMeta("p1", "a1", 1000, 640.0, 480.0),
        "p2": PhotoMeta("p2", "a1", None, 640.0, 480.0),
        "p3": PhotoMeta("p3", None, 3000, 800.0, 600.0),
    }
    instances = (
        Instance("i1", "p1", BBox(10, 20, 30, 40), "alice", face(12, 24, 24, 30, 0.95, "f0")),
        Instance("i2", "p1", BBox(100, 20, 30, 40), "bob", face(101, 22, 25, 33, 0.8, "p45")),
        Instance("i3", "p2", BBox(-5, 0, 30, 40), "alice", None),
        Instance("i4", "p3", BBox(50.5, 60.25, 20, 20), None, face(51, 61, 18, 18, 0.7, "m90")),
        Instance("i5", "p3", BBox(200, 60, 22, 30), "bob", None),
    )
    return Corpus(photos, instances)


# --- acceptance reporting ---------------------------------------------------

_CRITERIA: dict[int, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    n = marker.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        verdict = "PASS" if rep.passed else "FAIL"
        _CRITERIA[n] = f"criterion {n}: {verdict}  ({item.name}, {rep.duration:.1f} s)"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[n])
