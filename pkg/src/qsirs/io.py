"""Plot-ready CSV/JSON writers and atomic output plumbing.

All floating-point CSV fields use scientific notation with 17 significant
digits so regression diffs are exact; undefined quantities (e.g. a
reproduction index for an absent strain) are empty cells.  Writes go to a
temporary file in the target directory followed by an atomic rename.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from typing import Iterable, Mapping, Sequence

import numpy as np

from .equilibria import ContinuationResult, EquilibriumPoint, Infeasible
from .integrate import Trajectory
from .model import ModelParams
from .reproduction import ReproductionReport, rt_report
from .model import coupling_snapshot

TRAJECTORY_HEADER = ("t,S,I0,I1,R,D,g0,g1,v0,v1,beta00,beta01,beta11,nu0,"
                     "mu_crit,Rt0,Rt1,Gt")


def fmt(x: float | None) -> str:
    """17-significant-digit scientific notation; empty for undefined."""
    if x is None:
        return ""
    return format(float(x), ".16e")


def atomic_write_text(path: str, text: str) -> None:
    """Write via a same-directory temp file and atomic rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def config_sha256(config: Mapping) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def trajectory_csv(traj: Trajectory, p: ModelParams | None = None,
                   reports: Sequence[ReproductionReport] | None = None) -> str:
    """Per-sample trajectory table with coupling and reproduction columns."""
    p = p or traj.params
    if reports is None:
        reports = [rt_report(row, p) for row in traj.states]
    lines = [TRAJECTORY_HEADER]
    for t, row, rep in zip(traj.times, traj.states, reports):
        snap = coupling_snapshot(p, row[1], row[2], row[7], row[8])
        cells = [fmt(t), *(fmt(v) for v in row),
                 fmt(snap.beta00), fmt(snap.beta01), fmt(snap.beta11),
                 fmt(snap.nu0), fmt(snap.mu_crit),
                 fmt(rep.Rt0), fmt(rep.Rt1), fmt(rep.growth)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def events_json(traj: Trajectory) -> str:
    payload = {
        "status": traj.status,
        "final_time": traj.final_time,
        "n_accepted": traj.n_accepted,
        "n_rejected": traj.n_rejected,
        "clamp_mass": traj.clamp_mass,
        "max_macro_drift": traj.max_macro_drift,
        "max_micro_drift": traj.max_micro_drift,
        "settle_start": traj.settle_start,
        "events": [e.to_dict() for e in traj.events],
    }
    return json_text(payload)


def catalog_json(entries: Iterable[EquilibriumPoint | Infeasible | Mapping]) -> str:
    out = []
    for e in entries:
        out.append(e.to_dict() if hasattr(e, "to_dict") else dict(e))
    return json_text(out)


def families_csv(result: ContinuationResult) -> str:
    lines = ["pi1,family,S,I0,I1,R,D,g0,g1,v0,v1"]
    for fam in result.families:
        for pi1, pt in zip(fam.pi1_values, fam.points):
            m, q = pt.macro, pt.micro
            lines.append(",".join([fmt(pi1), fam.tag,
                                   *(fmt(v) for v in (m.S, m.I0, m.I1, m.R, m.D,
                                                      q.g0, q.g1, q.v0, q.v1))]))
    return "\n".join(lines) + "\n"


def families_json(result: ContinuationResult) -> str:
    payload = {
        "step": result.step,
        "birth_pi1": result.birth_pi1,
        "collision_pi1": result.collision_pi1,
        "families": [
            {"tag": fam.tag,
             "pi1_first": fam.pi1_values[0], "pi1_last": fam.pi1_values[-1],
             "n_points": len(fam.points),
             "events": [{"kind": ev.kind, "pi1": ev.pi1} for ev in fam.events]}
            for fam in result.families
        ],
    }
    return json_text(payload)


def spectra_csv(rows: Iterable[tuple[float, np.ndarray]]) -> str:
    """Rows of (parameter value, eigenvalues); padded to nine columns each."""
    header = ["param"] + [f"re_{k}" for k in range(1, 10)] + [f"im_{k}" for k in range(1, 10)]
    lines = [",".join(header)]
    for value, eigs in rows:
        eigs = np.asarray(eigs, dtype=complex)
        re = list(eigs.real) + [None] * (9 - len(eigs))
        im = list(eigs.imag) + [None] * (9 - len(eigs))
        lines.append(",".join([fmt(value), *(fmt(v) for v in re), *(fmt(v) for v in im)]))
    return "\n".join(lines) + "\n"
