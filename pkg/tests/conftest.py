import numpy as np
import pytest

from argus_forge import Image, ModelConfig, ModelParameters, init_parameters


def random_params(config: ModelConfig, seed: int = 0, scale: float = 0.3) -> ModelParameters:
    """Parameters with every weight (including the output head) random."""
    base = init_parameters(config, seed)
    rng = np.random.default_rng(seed + 1000)
    weights = {}
    for name, w in base.weights.items():
        if "logits" in name:
            w = rng.normal(0.0, scale, w.shape).astype(np.float32)
        weights[name] = w
    return ModelParameters(config, weights, 0)


def random_image(rng, h, w, c=3, bitdepth=8) -> Image:
    return Image(rng.integers(0, 1 << bitdepth, size=(h, w, c)), bitdepth)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["pixelcnn", "gated"])
def family(request):
    return request.param


@pytest.fixture
def small_config(family):
    return ModelConfig(family=family, block_count=2, hidden_width=12, input_kernel=3)


# --- acceptance summary -------------------------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "ran": False, "notes": []})
    if rep.failed:
        entry["passed"] = False
    if rep.when == "call":
        entry["ran"] = not rep.skipped
        entry["notes"] = [v for k, v in item.user_properties if k == "note"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["passed"] and e["ran"] else ("SKIP" if e["passed"] else "FAIL")
        terminalreporter.write_line(f"[{status}] criterion {number}: {e['title']}")
        for note in e["notes"]:
            terminalreporter.write_line(f"         {note}")


@pytest.fixture
def note(record_property):
    return lambda text: record_property("note", text)
