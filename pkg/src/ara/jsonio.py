"""JSON formats for game and domain instances.

Family is detected from the top-level keys: ``schedules`` marks an air
marshal instance, ``categories`` a screening instance, and ``k`` a raw
allocation game.  Target weights serialize as a list parallel to ``cells``.
"""

from __future__ import annotations

import hashlib
import json

from ara.core import AdversaryType, AraGame, AssignmentConstraint, GameError, Target
from ara.fams import FamsInstance, FlightSpec, Schedule
from ara.tsg import CategorySpec, ResourceSpec, RiskLevel, TeamSpec, TsgInstance


class ParseError(Exception):
    def __init__(self, where: str, detail: str):
        super().__init__(f"{where}: {detail}")


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def instance_digest(data) -> str:
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()[:16]


def game_to_json(game: AraGame) -> dict:
    cons = []
    for c in game.constraints:
        cells = sorted(c.cells)
        entry = {"cells": [list(x) for x in cells], "lower": c.lower, "upper": c.upper}
        if c.label:
            entry["label"] = c.label
        if c.coeffs:
            entry["coeffs"] = [[i, j, c.coeffs[(i, j)]] for (i, j) in cells if (i, j) in c.coeffs]
        cons.append(entry)
    targets = []
    for t in game.targets:
        cells = sorted(t.cells)
        targets.append({"id": t.id, "cells": [list(x) for x in cells],
                        "weights": [t.weights.get(tuple(x), 0.0) for x in cells],
                        "u_def": t.payoff_defended, "u_undef": t.payoff_undefended})
    types = [{"id": a.id, "p": a.probability, "targets": sorted(a.targets)}
             for a in game.adversary_types]
    return {"k": game.k, "n": game.n, "constraints": cons, "targets": targets,
            "adversary_types": types}


def game_from_json(data: dict) -> AraGame:
    try:
        cons = []
        for c in data["constraints"]:
            coeffs = {(i, j): m for i, j, m in c.get("coeffs", [])} or None
            cons.append(AssignmentConstraint(frozenset(map(tuple, c["cells"])),
                                             c["lower"], c["upper"], c.get("label", ""), coeffs))
        targets = []
        for t in data["targets"]:
            cells = [tuple(x) for x in t["cells"]]
            weights = dict(zip(cells, t["weights"]))
            targets.append(Target(t["id"], frozenset(cells), weights, t["u_def"], t["u_undef"]))
        types = tuple(AdversaryType(a["id"], a["p"], frozenset(a["targets"]))
                      for a in data.get("adversary_types", []))
        return AraGame(data["k"], data["n"], tuple(cons), tuple(targets), types)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError("game", str(exc)) from exc


def fams_to_json(inst: FamsInstance) -> dict:
    return {"marshals": inst.num_marshals,
            "schedules": [{"id": s.id, "flights": sorted(s.flights)} for s in inst.schedules],
            "flights": [{"id": f.id, "u_def": f.u_def, "u_undef": f.u_undef}
                        for f in inst.flights],
            "forbidden": [list(p) for p in sorted(inst.forbidden)]}


def fams_from_json(data: dict) -> FamsInstance:
    try:
        return FamsInstance(
            data["marshals"],
            tuple(Schedule(s["id"], frozenset(s["flights"])) for s in data["schedules"]),
            tuple(FlightSpec(f["id"], f["u_def"], f["u_undef"]) for f in data["flights"]),
            frozenset((m, s) for m, s in data.get("forbidden", [])))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError("fams instance", str(exc)) from exc


def tsg_to_json(inst: TsgInstance) -> dict:
    return {"resources": [{"id": r.id, "capacity": r.capacity} for r in inst.resources],
            "teams": [{"id": t.id, "members": list(t.members), "eff": t.effectiveness}
                      for t in inst.teams],
            "categories": [{"id": c.id, "risk": c.risk, "flight": c.flight, "n": c.passengers,
                            "u_def": c.u_def, "u_undef": c.u_undef} for c in inst.categories],
            "risks": [{"id": r.id, "p": r.probability} for r in inst.risk_levels]}


def tsg_from_json(data: dict) -> TsgInstance:
    try:
        return TsgInstance(
            tuple(ResourceSpec(r["id"], r["capacity"]) for r in data["resources"]),
            tuple(TeamSpec(t["id"], tuple(t["members"]), t["eff"]) for t in data["teams"]),
            tuple(CategorySpec(c["id"], c["risk"], c["flight"], c["n"], c["u_def"], c["u_undef"])
                  for c in data["categories"]),
            tuple(RiskLevel(r["id"], r["p"]) for r in data["risks"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError("tsg instance", str(exc)) from exc


def detect_family(data: dict) -> str:
    if "schedules" in data:
        return "fams"
    if "categories" in data:
        return "tsg"
    if "k" in data:
        return "ara"
    raise ParseError("instance", "cannot detect family from keys "
                     + ", ".join(sorted(data)))


def load_instance(path: str):
    """Read an instance file; returns (family, parsed instance)."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(path, str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(path, f"line {exc.lineno}: {exc.msg}") from exc
    family = detect_family(data)
    if family == "fams":
        return family, fams_from_json(data)
    if family == "tsg":
        return family, tsg_from_json(data)
    return family, game_from_json(data)
