"""Bundled example data.

``drug``
    Recovery under a drug with blood type (W) observed and age (U) latent:
    the aggregated table over (X, Y, W), the full table over (X, Y, W, U)
    and the prior P(U) = 0.8543. State 0 is the first label of each node.
``fourstate``
    A three-node diagram Z -> X -> Y, Z -> Y with a four-state Z, as CPTs.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
import json

from .diagram import CausalDiagram, diagram_from_dict
from .tables import Cpt, JointTable, cpt_from_dict

__all__ = ["DrugExample", "drug_example", "fourstate_example", "fixture_path", "load_cpts"]


def fixture_path(name: str, filename: str):
    """Path-like handle to a bundled file, e.g. ``fixture_path("drug", "observed.json")``."""
    return resources.files("causalbounds") / "data" / name / filename


def _load(name, filename):
    with fixture_path(name, filename).open() as fh:
        return json.load(fh)


def load_cpts(data, G: CausalDiagram) -> list[Cpt]:
    """CPTs from ``{"cpts": [...]}`` or a bare list of CPT dicts."""
    items = data["cpts"] if isinstance(data, dict) else data
    return [cpt_from_dict(d, G) for d in items]


@dataclass(frozen=True)
class DrugExample:
    diagram: CausalDiagram
    observed: JointTable  # P(X, Y, W)
    full: JointTable  # P(X, Y, W, U)
    prior: JointTable  # P(U)
    labels: dict


def drug_example() -> DrugExample:
    model = _load("drug", "model.json")
    return DrugExample(
        diagram_from_dict(model),
        JointTable.from_dict(_load("drug", "observed.json")),
        JointTable.from_dict(_load("drug", "full.json")),
        JointTable.from_dict(_load("drug", "prior.json")),
        model.get("labels", {}),
    )


def fourstate_example() -> tuple[CausalDiagram, list[Cpt]]:
    G = diagram_from_dict(_load("fourstate", "model.json"))
    return G, load_cpts(_load("fourstate", "cpts.json"), G)
