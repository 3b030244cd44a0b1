"""Bundled reference data from a four-system reactor-simulator interface.

Ships with the package so the classifier can be trained and the pipeline
demonstrated without collecting new sessions:

* 39 evaluated procedure paths with their metric fractions (visual
  density, interference, span) and expert-confirmed PIF levels;
* three additional procedures with metrics but no observations, used as
  prediction targets;
* a builder for the interface graph behind those paths (four system
  roots, navigation groups, parameter leaves, element counts per screen
  matching the metric denominators);
* deterministic per-path duration/error samples consistent with the
  campaign's observed error paths and time-deviated paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .graph import ElementKind, InterfaceElement, InterfaceGraph, Screen
from .ingest import PathSamples, Procedure, ProcedureStep

NORMALIZER_PX = 2654.05


@dataclass(frozen=True)
class MetricRow:
    path_id: str
    vd: tuple[int, int]  # numerator, denominator
    sid: tuple[int, int]
    is_px: tuple[float, float]  # traversal px, normalizer px
    label: str

    def features(self) -> tuple[float, float, float]:
        return (
            self.vd[0] / self.vd[1],
            self.sid[0] / self.sid[1] if self.sid[1] else 0.0,
            self.is_px[0] / self.is_px[1],
        )


REFERENCE_METRIC_ROWS: tuple[MetricRow, ...] = (
    MetricRow("P_100", (1, 4), (0, 3), (1267.22, NORMALIZER_PX), "HSI0"),
    MetricRow("P_110", (1, 43), (1, 42), (511.59, NORMALIZER_PX), "HSI1"),
    MetricRow("P_111", (1, 4), (2, 3), (1280.07, NORMALIZER_PX), "HSI0"),
    MetricRow("P_112", (1, 4), (2, 3), (1256.33, NORMALIZER_PX), "HSI0"),
    MetricRow("P_113", (1, 4), (2, 3), (1243.96, NORMALIZER_PX), "HSI0"),
    MetricRow("P_120", (1, 43), (1, 42), (735.97, NORMALIZER_PX), "HSI1"),
    MetricRow("P_121", (1, 13), (0, 12), (252.68, NORMALIZER_PX), "HSI1"),
    MetricRow("P_122", (1, 13), (5, 12), (913.84, NORMALIZER_PX), "HSI1"),
    MetricRow("P_123", (1, 13), (5, 12), (750.67, NORMALIZER_PX), "HSI1"),
    MetricRow("P_124", (1, 13), (5, 12), (590.25, NORMALIZER_PX), "HSI1"),
    MetricRow("P_125", (1, 13), (5, 12), (786.33, NORMALIZER_PX), "HSI1"),
    MetricRow("P_126", (1, 13), (5, 12), (882.77, NORMALIZER_PX), "HSI1"),
    MetricRow("P_200", (1, 4), (0, 3), (1222.86, NORMALIZER_PX), "HSI0"),
    MetricRow("P_210", (1, 19), (3, 18), (209.35, NORMALIZER_PX), "HSI1"),
    MetricRow("P_211", (1, 20), (8, 19), (1705.02, NORMALIZER_PX), "HSI5"),
    MetricRow("P_212", (1, 20), (8, 19), (2220.46, NORMALIZER_PX), "HSI5"),
    MetricRow("P_213", (1, 20), (8, 19), (588.80, NORMALIZER_PX), "HSI5"),
    MetricRow("P_214", (1, 20), (8, 19), (232.52, NORMALIZER_PX), "HSI5"),
    MetricRow("P_215", (1, 20), (8, 19), (1549.82, NORMALIZER_PX), "HSI5"),
    MetricRow("P_216", (1, 20), (8, 19), (657.01, NORMALIZER_PX), "HSI5"),
    MetricRow("P_300", (1, 4), (0, 3), (1213.48, NORMALIZER_PX), "HSI0"),
    MetricRow("P_310", (1, 4), (2, 3), (215.60, NORMALIZER_PX), "HSI1"),
    MetricRow("P_311", (1, 5), (0, 4), (1780.31, NORMALIZER_PX), "HSI0"),
    MetricRow("P_312", (1, 5), (0, 4), (1876.91, NORMALIZER_PX), "HSI0"),
    MetricRow("P_313", (1, 5), (0, 4), (1122.47, NORMALIZER_PX), "HSI0"),
    MetricRow("P_314", (1, 5), (0, 4), (1552.57, NORMALIZER_PX), "HSI0"),
    MetricRow("P_320", (1, 14), (1, 13), (186.10, NORMALIZER_PX), "HSI1"),
    MetricRow("P_321", (1, 18), (1, 17), (761.20, NORMALIZER_PX), "HSI5"),
    MetricRow("P_322", (1, 18), (1, 17), (623.87, NORMALIZER_PX), "HSI5"),
    MetricRow("P_323", (1, 18), (1, 17), (924.93, NORMALIZER_PX), "HSI5"),
    MetricRow("P_324", (1, 18), (1, 17), (1379.73, NORMALIZER_PX), "HSI5"),
    MetricRow("P_325", (1, 18), (1, 17), (794.43, NORMALIZER_PX), "HSI5"),
    MetricRow("P_400", (1, 4), (0, 3), (1243.78, NORMALIZER_PX), "HSI0"),
    MetricRow("P_410", (1, 8), (7, 7), (395.25, NORMALIZER_PX), "HSI1"),
    MetricRow("P_411", (1, 7), (0, 6), (898.57, NORMALIZER_PX), "HSI0"),
    MetricRow("P_412", (1, 7), (0, 6), (887.85, NORMALIZER_PX), "HSI0"),
    MetricRow("P_413", (1, 7), (1, 6), (859.37, NORMALIZER_PX), "HSI0"),
    MetricRow("P_414", (1, 7), (1, 6), (858.08, NORMALIZER_PX), "HSI0"),
    MetricRow("P_415", (1, 7), (1, 6), (862.92, NORMALIZER_PX), "HSI0"),
)

PREDICTION_ROWS: tuple[MetricRow, ...] = (
    MetricRow("TP_1", (1, 33), (1, 32), (773.94, NORMALIZER_PX), "HSI1"),
    MetricRow("TP_2", (1, 33), (4, 32), (823.29, NORMALIZER_PX), "HSI5"),
    MetricRow("TP_3", (1, 33), (5, 32), (1044.23, NORMALIZER_PX), "HSI5"),
)

# Paths on which the campaign observed at least one operator error (all
# errors of commission); the outcome subset additionally produced a wrong
# final result. The time-deviated set showed markedly longer durations
# than same-system peers.
OBSERVED_ERROR_PATHS = frozenset(
    {"P_122", "P_125", "P_211", "P_212", "P_214", "P_216", "P_311", "P_321", "P_323", "P_324", "P_413", "P_414"}
)
OBSERVED_OUTCOME_ERROR_PATHS = frozenset({"P_122", "P_216", "P_323"})
OBSERVED_TIME_DEVIATED_PATHS = frozenset(
    {"P_211", "P_212", "P_122", "P_123", "P_126", "P_321", "P_322", "P_411", "P_414"}
)

SYSTEM_ROOTS = {
    "N_100": "auxiliary system",
    "N_200": "nuclear island system",
    "N_300": "conventional island system",
    "N_400": "electrical system",
}

_GROUP_NAMES = {
    "N_110": "0KBE DW101",
    "N_120": "0KBA DW201",
    "N_210": "2LBA DW001",
    "N_310": "0LCQ DW301",
    "N_320": "0LBH DW001",
    "N_410": "0 ELEDW002",
}

_LEAF_NAMES = {
    "N_111": "condensate polisher flow",
    "N_112": "condensate polisher pressure",
    "N_113": "condensate polisher level",
    "N_121": "0KBA10CT001 temperature",
    "N_122": "0KBA10CP001 pressure",
    "N_123": "0KBA10CP002 pressure",
    "N_124": "0KBA10CP003 pressure",
    "N_125": "0KBA10CP004 pressure",
    "N_126": "0KBA10CP005 pressure",
    "N_211": "2LBA10CP801C",
    "N_212": "2LBA10CP802C",
    "N_213": "2LBA10CP803C",
    "N_214": "2LBA10CT801A",
    "N_215": "2LBA10CT802A",
    "N_216": "2LBA10CF801B",
    "N_311": "HP heater 1A outlet temperature",
    "N_312": "HP heater 1B outlet temperature",
    "N_313": "HP heater 2A outlet temperature",
    "N_314": "HP heater 2B outlet temperature",
    "N_321": "feedwater pump 11 speed",
    "N_322": "feedwater pump 11 inlet pressure",
    "N_323": "feedwater pump 12 speed",
    "N_324": "feedwater pump 12 inlet pressure",
    "N_325": "feedwater pump lube oil pressure",
    "N_411": "power factor",
    "N_412": "generator reactive power",
    "N_413": "excitation voltage",
    "N_414": "terminal voltage",
    "N_415": "excitation current",
}

# (screen, members, fillers) per navigation level; filler counts make the
# per-screen element totals equal the metric-table denominators.
_SCREEN_LAYOUT = (
    ("SCR_TOP", ["N_100", "N_200", "N_300", "N_400"], 0),
    ("SCR_1OV", ["N_110", "N_120"], 41),
    ("SCR_11X", ["N_111", "N_112", "N_113"], 1),
    ("SCR_12X", ["N_121", "N_122", "N_123", "N_124", "N_125", "N_126"], 7),
    ("SCR_2OV", ["N_210"], 18),
    ("SCR_21X", ["N_211", "N_212", "N_213", "N_214", "N_215", "N_216"], 14),
    ("SCR_3OV", ["N_310"], 3),
    ("SCR_31X", ["N_311", "N_312", "N_313", "N_314"], 1),
    ("SCR_32OV", ["N_320"], 13),
    ("SCR_32X", ["N_321", "N_322", "N_323", "N_324", "N_325"], 13),
    ("SCR_4OV", ["N_410"], 7),
    ("SCR_41X", ["N_411", "N_412", "N_413", "N_414", "N_415"], 2),
)

_PARENTS = {
    "N_110": "N_100",
    "N_120": "N_100",
    "N_210": "N_200",
    "N_310": "N_300",
    "N_320": "N_300",
    "N_410": "N_400",
}
for _leaf in _LEAF_NAMES:
    _PARENTS[_leaf] = _leaf[:4] + "0"  # N_122 -> N_120, N_211 -> N_210, ...

SCREEN_W, SCREEN_H = 1920.0, 1080.0
_CELL_W, _CELL_H = 120.0, 84.0
_BOX_W, _BOX_H = 100.0, 64.0
_COLS = 15


def _grid_position(index: int) -> tuple[float, float, tuple[float, float, float, float]]:
    col, row = index % _COLS, index // _COLS
    x = 40.0 + col * _CELL_W + _CELL_W / 2.0
    y = 40.0 + row * _CELL_H + _CELL_H / 2.0
    return x, y, (x - _BOX_W / 2.0, y - _BOX_H / 2.0, _BOX_W, _BOX_H)


def build_reference_graph() -> InterfaceGraph:
    """Interface graph behind the bundled dataset (159 elements, 12 screens)."""
    screens = [Screen(sid, SCREEN_W, SCREEN_H) for sid, _, _ in _SCREEN_LAYOUT]
    elements: list[InterfaceElement] = []
    edges: list[tuple[str, str]] = []
    for screen_id, members, fillers in _SCREEN_LAYOUT:
        slot = 0
        for node_id in members:
            x, y, bbox = _grid_position(slot)
            slot += 1
            if node_id in SYSTEM_ROOTS:
                kind, name = ElementKind.SYSTEM_ROOT, SYSTEM_ROOTS[node_id]
            elif node_id in _GROUP_NAMES:
                kind, name = ElementKind.PARAMETER_GROUP, _GROUP_NAMES[node_id]
            else:
                kind, name = ElementKind.PARAMETER, _LEAF_NAMES[node_id]
            elements.append(InterfaceElement(node_id, name, kind, screen_id, (x, y), bbox))
            if node_id in _PARENTS:
                edges.append((_PARENTS[node_id], node_id))
        anchor = members[0]
        for k in range(fillers):
            x, y, bbox = _grid_position(slot)
            slot += 1
            fid = f"F_{screen_id}_{k:02d}"
            elements.append(
                InterfaceElement(fid, f"{screen_id.lower()} display {k}", ElementKind.PARAMETER, screen_id, (x, y), bbox)
            )
            edges.append((_PARENTS.get(anchor, anchor), fid))
    return InterfaceGraph(elements, edges, screens)


def reference_procedures() -> list[Procedure]:
    """Five parameter-check procedures covering all 29 leaf paths."""

    def step(n: int, node: str) -> ProcedureStep:
        name = _LEAF_NAMES[node]
        return ProcedureStep(f"{node}-check", f"Step {n}: check whether the parameter {name} is at its required value", "P_" + node[2:])

    groups = {
        "PR_1": ["N_111", "N_112", "N_113", "N_121"],
        "PR_2": ["N_122", "N_123", "N_124", "N_125", "N_126"],
        "PR_3": ["N_211", "N_212", "N_213", "N_214", "N_215", "N_216"],
        "PR_4": ["N_311", "N_312", "N_313", "N_314", "N_321", "N_322", "N_323"],
        "PR_5": ["N_324", "N_325", "N_411", "N_412", "N_413", "N_414", "N_415"],
    }
    return [
        Procedure(pid, tuple(step(i + 1, node) for i, node in enumerate(nodes)))
        for pid, nodes in groups.items()
    ]


_BASE_MEDIAN_S = {"N_100": 20.0, "N_200": 25.0, "N_300": 30.0, "N_400": 15.0}
_TIME_INFLATION = 2.0
_LOG_SPREAD = 0.1
_ATTEMPTS = 6


def reference_grouping() -> dict[str, str]:
    """path id -> owning system root id, by the path numbering convention."""
    return {row.path_id: f"N_{row.path_id[2]}00" for row in REFERENCE_METRIC_ROWS}


def reference_path_samples() -> dict[str, PathSamples]:
    """Deterministic samples reproducing the campaign's observed patterns.

    Six attempts per path. Log durations sit at ln(median) and
    ln(median) +/- 0.1 twice each, so the lower-middle sample median is
    exactly the planted median; time-deviated paths carry twice the
    system-base median. Error paths have one annotated attempt
    (execution; plus outcome on the outcome subset).
    """
    grouping = reference_grouping()
    samples: dict[str, PathSamples] = {}
    for row in REFERENCE_METRIC_ROWS:
        base = _BASE_MEDIAN_S[grouping[row.path_id]]
        median = base * _TIME_INFLATION if row.path_id in OBSERVED_TIME_DEVIATED_PATHS else base
        durations = [
            median,
            median * math.exp(-_LOG_SPREAD),
            median * math.exp(_LOG_SPREAD),
            median,
            median * math.exp(-_LOG_SPREAD),
            median * math.exp(_LOG_SPREAD),
        ]
        has_error = row.path_id in OBSERVED_ERROR_PATHS
        has_outcome = row.path_id in OBSERVED_OUTCOME_ERROR_PATHS
        samples[row.path_id] = PathSamples(
            durations=durations,
            attempts=_ATTEMPTS,
            execution_errors=1 if has_error else 0,
            outcome_errors=1 if has_outcome else 0,
            error_steps=1 if has_error else 0,
        )
    return samples


def training_rows() -> list[tuple[tuple[float, float, float], str]]:
    """(features, label) pairs for the classifier, from the 39 reference rows."""
    return [(row.features(), row.label) for row in REFERENCE_METRIC_ROWS]


def reference_training_csv() -> str:
    from .pifnet import training_csv

    return training_csv((row.path_id, row.features(), row.label) for row in REFERENCE_METRIC_ROWS)
