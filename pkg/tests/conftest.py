import json

import pytest

TINY_CONFIG = {
    "seed": 3,
    "architecture": {"num_layers": 2, "modules_per_layer": 4, "neurons_per_module": 5, "max_path_width": 2},
    "evolution": {"population_size": 4, "generations": 3, "epochs_per_eval": 1,
                  "minibatches_per_epoch": 3, "batch_size": 8},
    "tasks": {"source": {"id": "A", "kind": "blobs", "classes": 3, "dim": 5, "per_class": 20,
                         "spread": 0.2, "seed": 1},
              "destination": {"id": "B", "kind": "derived", "transform": "fixed-rotation", "seed": 2}},
    "plan": {"iterations": 2},
}


@pytest.fixture
def tiny_config_path(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY_CONFIG))
    return path


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
