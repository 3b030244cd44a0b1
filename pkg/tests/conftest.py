from __future__ import annotations

import pytest

from hmirisk.graph import load_graph


@pytest.fixture
def electrical_branch_graph():
    """Two-branch fixture: N_100 -> N_110 and N_400 -> N_410 -> N_411..N_415."""
    document = {
        "screens": [
            {"id": "TOP", "width_px": 1920, "height_px": 1080},
            {"id": "ELEC", "width_px": 1920, "height_px": 1080},
        ],
        "elements": [
            {"id": "N_100", "name": "auxiliary system", "kind": "system_root", "screen": "TOP", "x": 200, "y": 100},
            {"id": "N_110", "name": "0KBE DW101", "kind": "parameter_group", "screen": "TOP", "x": 200, "y": 300,
             "bbox": [150, 270, 100, 60], "parent": "N_100"},
            {"id": "N_400", "name": "electrical system", "kind": "system_root", "screen": "TOP", "x": 600, "y": 100},
            {"id": "N_410", "name": "0 ELEDW002", "kind": "parameter_group", "screen": "ELEC", "x": 300, "y": 100,
             "bbox": [250, 70, 100, 60], "parent": "N_400"},
            {"id": "N_411", "name": "power factor", "kind": "parameter", "screen": "ELEC", "x": 150, "y": 300,
             "bbox": [100, 270, 100, 60], "parent": "N_410"},
            {"id": "N_412", "name": "generator reactive power", "kind": "parameter", "screen": "ELEC", "x": 300, "y": 300,
             "bbox": [250, 270, 100, 60], "parent": "N_410"},
            {"id": "N_413", "name": "excitation voltage", "kind": "parameter", "screen": "ELEC", "x": 450, "y": 300,
             "bbox": [400, 270, 100, 60], "parent": "N_410"},
            {"id": "N_414", "name": "terminal voltage", "kind": "parameter", "screen": "ELEC", "x": 600, "y": 300,
             "bbox": [550, 270, 100, 60], "parent": "N_410"},
            {"id": "N_415", "name": "excitation current", "kind": "parameter", "screen": "ELEC", "x": 750, "y": 300,
             "bbox": [700, 270, 100, 60], "parent": "N_410"},
        ],
    }
    return load_graph(document)


@pytest.fixture
def two_screen_graph():
    """Minimal navigable fixture: root + two leaves on screen A, one leaf on B."""
    return load_graph(
        {
            "screens": [
                {"id": "A", "width_px": 800, "height_px": 600},
                {"id": "B", "width_px": 800, "height_px": 600},
            ],
            "elements": [
                {"id": "N_1", "name": "plant", "kind": "system_root", "screen": "A", "x": 400, "y": 50},
                {"id": "N_11", "name": "pump speed", "kind": "parameter", "screen": "A", "x": 200, "y": 300,
                 "bbox": [150, 270, 100, 60], "parent": "N_1"},
                {"id": "N_12", "name": "pump pressure", "kind": "parameter", "screen": "A", "x": 500, "y": 300,
                 "bbox": [450, 270, 100, 60], "parent": "N_1"},
                {"id": "N_13", "name": "valve position", "kind": "parameter", "screen": "B", "x": 400, "y": 300,
                 "bbox": [350, 270, 100, 60], "parent": "N_1"},
            ],
        }
    )


@pytest.fixture
def designated_sim():
    """Similarity stub: names starting with 'SIM' are similar to everything."""

    def sim(a: str, b: str) -> float:
        if a == b:
            return 1.0
        if a.startswith("SIM") or b.startswith("SIM"):
            return 0.9
        return 0.1

    return sim
