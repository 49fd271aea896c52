"""Result files: CSV tables, deformed-shape polylines and the resolved-case echo."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import IO, Any, Iterable, Optional, Sequence

import numpy as np

from fvbeam.geometry import BeamMesh, InitialGeometry
from fvbeam.solver import IncrementReport
from fvbeam.state import BeamState

logger = logging.getLogger(__name__)

HISTORY_FIXED = ("increment", "load_factor", "converged", "iterations", "residual")


def fmt(value: float) -> str:
    """Full double precision (17 significant digits)."""
    return f"{float(value):.17g}"


def history_header(reports: Sequence[IncrementReport]) -> list[str]:
    keys: list[str] = []
    for report in reports:
        for key in report.monitors:
            if key not in keys:
                keys.append(key)
    return [*HISTORY_FIXED, *keys]


def write_history(path: Path, reports: Sequence[IncrementReport]) -> Path:
    """One row per attempted increment."""
    header = history_header(reports)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in reports:
            row = [str(r.index), fmt(r.load_factor), str(int(r.converged)), str(r.iterations), fmt(r.residual)]
            row.extend(fmt(r.monitors[k]) if k in r.monitors else "" for k in header[len(HISTORY_FIXED):])
            writer.writerow(row)
    logger.info("Wrote history: %s", path)
    return Path(path)


_FINAL_GROUPS = ("r", "w", "psi", "Gamma", "K", "n", "m")


def write_final_state(path: Path, state: BeamState, geom: InitialGeometry, mesh: BeamMesh) -> Path:
    """Per-face table of position, displacement, rotation vector, strains and resultants."""
    header = ["face", "s"] + [f"{g}_{a}" for g in _FINAL_GROUPS for a in "xyz"]
    columns = {
        "r": geom.r0_f + state.w_f,
        "w": state.w_f,
        "psi": state.psi_f,
        "Gamma": state.Gamma_f,
        "K": state.K_f,
        "n": state.n_f,
        "m": state.m_f,
    }
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for f in range(mesh.n_faces):
            row = [str(f), fmt(mesh.faces[f])]
            for group in _FINAL_GROUPS:
                row.extend(fmt(v) for v in columns[group][f])
            writer.writerow(row)
    logger.info("Wrote final state: %s", path)
    return Path(path)


def deformed_points(state: BeamState, geom: InitialGeometry) -> np.ndarray:
    """West face, every cell centre, east face."""
    return np.vstack([
        geom.r0_f[0] + state.w_f[0],
        geom.r0_c + state.w_c,
        geom.r0_f[-1] + state.w_f[-1],
    ])


class PolylineWriter:
    """Deformed mean-line snapshots as ``x y z`` lines, separated by blank lines."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._fh: Optional[IO[str]] = None
        self.snapshots = 0

    def __enter__(self) -> "PolylineWriter":
        self._fh = self.path.open("w", encoding="utf-8")
        return self

    def __exit__(self, *exc: Any) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def write(self, state: BeamState, geom: InitialGeometry) -> None:
        if self._fh is None:
            raise RuntimeError("PolylineWriter used outside its context")
        if self.snapshots:
            self._fh.write("\n")
        for p in deformed_points(state, geom):
            self._fh.write(" ".join(fmt(v) for v in p) + "\n")
        self.snapshots += 1


def read_polyline(path: Path) -> list[np.ndarray]:
    """Parse a polyline file back into one ``(n, 3)`` array per snapshot."""
    blocks: list[list[list[float]]] = [[]]
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            if blocks[-1]:
                blocks.append([])
            continue
        blocks[-1].append([float(v) for v in line.split()])
    return [np.array(b) for b in blocks if b]


def write_table(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Generic CSV writer; floats are written with 17 significant digits."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    logger.info("Wrote table: %s", path)
    return Path(path)


def write_case_echo(path: Path, case_json: str, derived: dict[str, Any], summary: dict[str, Any]) -> Path:
    """Resolved case, derived quantities and the run summary in one JSON file."""
    payload = {
        "case": json.loads(case_json),
        "derived": derived,
        "summary": summary,
    }
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    logger.info("Wrote case echo: %s", path)
    return Path(path)
