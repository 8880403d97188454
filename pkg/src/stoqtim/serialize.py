"""JSON serialization of Hamiltonian specs, encodings, and reports.

The Hamiltonian spec format is shared by every CLI subcommand:

    {"class": "tim" | "hcd" | "hcb" | "hcbstar" | "stoqlh",
     "graph": {"n": int, "edges": [[u, v], ...]},
     <coefficient tables as sparse maps>,
     "sector": {"m": int, "r": int}}         # particle models only

Sparse maps are keyed by node ("2"), edge ("0,1", endpoints ascending) or
control triple ("2;0,1").  Unknown keys are rejected.  Serialization uses
canonical key order and repr-based (shortest-round-trip) floats, so
parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .encodings import Encoding
from .errors import ValidationError
from .graphs import InteractionGraph
from .models import (HcbHamiltonian, HcdHamiltonian, ModelHamiltonian,
                     StoqLhHamiltonian, TimHamiltonian, model_class)

SCHEMA_VERSION = 1

_MODEL_KEYS = {
    "tim": {"schema_version", "class", "graph", "form", "transverse",
            "longitudinal", "ising", "energy_shift"},
    "hcd": {"schema_version", "class", "graph", "sector", "hopping",
            "chemical", "pair_potential", "energy_shift"},
    "hcb": {"schema_version", "class", "graph", "sector", "hopping",
            "controlled_hopping", "chemical", "pair_potential",
            "projector_terms", "energy_shift"},
    "stoqlh": {"schema_version", "class", "graph", "two_local",
               "k_local_diagonal", "locality", "energy_shift"},
}
_MODEL_KEYS["hcbstar"] = _MODEL_KEYS["hcb"]


def _edge_key(pair) -> str:
    u, v = sorted(pair)
    return f"{u},{v}"


def _parse_edge(key: str) -> tuple[int, int]:
    try:
        u, v = (int(x) for x in key.split(","))
    except Exception as exc:
        raise ValidationError(f"bad edge key {key!r}") from exc
    return (u, v)


def _node_map_out(table: dict) -> dict:
    return {str(k): v for k, v in sorted(table.items())}


def _edge_map_out(table: dict) -> dict:
    return {_edge_key(k): v for k, v in sorted(table.items())}


def _parse_node_map(obj: dict, what: str) -> dict:
    out = {}
    for k, v in obj.items():
        try:
            out[int(k)] = float(v)
        except Exception as exc:
            raise ValidationError(f"bad {what} entry {k!r}: {v!r}") from exc
    return out


def _parse_edge_map(obj: dict, what: str) -> dict:
    out = {}
    for k, v in obj.items():
        out[_parse_edge(k)] = float(v)
    return out


def _graph_out(g: InteractionGraph) -> dict:
    return {"n": g.node_count, "edges": [list(e) for e in g.edge_list]}


def _parse_graph(obj: Any) -> InteractionGraph:
    if not isinstance(obj, dict) or set(obj) - {"n", "edges"}:
        raise ValidationError("graph must be {'n': int, 'edges': [[u,v],...]}")
    return InteractionGraph.build(int(obj["n"]),
                                  [(int(u), int(v)) for (u, v) in obj.get("edges", [])])


def model_to_dict(model: ModelHamiltonian) -> dict:
    cls = model_class(model)
    if isinstance(model, TimHamiltonian):
        return {
            "schema_version": SCHEMA_VERSION, "class": "tim",
            "graph": _graph_out(model.graph), "form": model.form,
            "transverse": _node_map_out(model.transverse),
            "longitudinal": _node_map_out(model.longitudinal),
            "ising": _edge_map_out(model.ising),
            "energy_shift": model.energy_shift,
        }
    if isinstance(model, HcdHamiltonian):
        return {
            "schema_version": SCHEMA_VERSION, "class": "hcd",
            "graph": _graph_out(model.graph), "sector": {"m": model.dimer_count},
            "hopping": model.hopping,
            "chemical": _node_map_out(model.chemical),
            "pair_potential": _edge_map_out(model.pair_potential),
            "energy_shift": model.energy_shift,
        }
    if isinstance(model, HcbHamiltonian):
        return {
            "schema_version": SCHEMA_VERSION, "class": cls,
            "graph": _graph_out(model.graph),
            "sector": {"m": model.particle_count, "r": model.range_},
            "hopping": _edge_map_out(model.hopping),
            "controlled_hopping": {f"{c};{_edge_key(e)}": t
                                   for (c, e), t in sorted(model.controlled_hopping.items())},
            "chemical": _node_map_out(model.chemical),
            "pair_potential": _edge_map_out(model.pair_potential),
            "projector_terms": [{"nodes": sorted(S), "weight": p}
                                for (S, p) in model.projector_terms],
            "energy_shift": model.energy_shift,
        }
    if isinstance(model, StoqLhHamiltonian):
        pairs = sorted({tuple(sorted(p)) for p, _ in model.two_local_terms})
        return {
            "schema_version": SCHEMA_VERSION, "class": "stoqlh",
            "graph": {"n": model.qubit_count, "edges": [list(e) for e in pairs]},
            "two_local": [{"qubits": list(pair), "matrix": M.tolist()}
                          for (pair, M) in model.two_local_terms],
            "k_local_diagonal": [
                {"qubits": list(subset),
                 "bits": "".join(str((x >> i) & 1) for i in range(len(subset))),
                 "weight": p}
                for (subset, x, p) in model.k_local_diagonal],
            "locality": model.locality_k,
            "energy_shift": model.energy_shift,
        }
    raise ValidationError(f"unknown model {type(model).__name__}")


def model_from_dict(obj: dict) -> ModelHamiltonian:
    if not isinstance(obj, dict) or "class" not in obj:
        raise ValidationError("Hamiltonian spec must be an object with a 'class' field")
    cls = obj["class"]
    if cls not in _MODEL_KEYS:
        raise ValidationError(f"unknown Hamiltonian class {cls!r}")
    unknown = set(obj) - _MODEL_KEYS[cls]
    if unknown:
        raise ValidationError(f"unknown keys in {cls} spec: {sorted(unknown)}")
    if cls == "tim":
        return TimHamiltonian(
            _parse_graph(obj.get("graph")),
            _parse_node_map(obj.get("transverse", {}), "transverse"),
            _parse_node_map(obj.get("longitudinal", {}), "longitudinal"),
            _parse_edge_map(obj.get("ising", {}), "ising"),
            float(obj.get("energy_shift", 0.0)),
            form=obj.get("form", "occupation"))
    if cls == "hcd":
        sector = obj.get("sector", {})
        return HcdHamiltonian(
            _parse_graph(obj.get("graph")), int(sector.get("m", 1)),
            float(obj.get("hopping", 0.0)),
            _parse_node_map(obj.get("chemical", {}), "chemical"),
            _parse_edge_map(obj.get("pair_potential", {}), "pair_potential"),
            float(obj.get("energy_shift", 0.0)))
    if cls in ("hcb", "hcbstar"):
        sector = obj.get("sector", {})
        controlled = {}
        for key, t in obj.get("controlled_hopping", {}).items():
            try:
                c_str, edge_str = key.split(";")
            except ValueError as exc:
                raise ValidationError(f"bad controlled-hopping key {key!r}") from exc
            controlled[(int(c_str), _parse_edge(edge_str))] = float(t)
        model = HcbHamiltonian(
            _parse_graph(obj.get("graph")), int(sector.get("m", 1)),
            int(sector.get("r", 1)),
            _parse_edge_map(obj.get("hopping", {}), "hopping"),
            controlled,
            _parse_node_map(obj.get("chemical", {}), "chemical"),
            _parse_edge_map(obj.get("pair_potential", {}), "pair_potential"),
            tuple((frozenset(int(u) for u in t["nodes"]), float(t["weight"]))
                  for t in obj.get("projector_terms", [])),
            float(obj.get("energy_shift", 0.0)))
        if cls == "hcbstar" and not model.has_controlled_hopping():
            raise ValidationError("hcbstar spec carries no controlled hopping")
        if cls == "hcb" and model.has_controlled_hopping():
            raise ValidationError("hcb spec must not carry controlled hopping")
        return model
    # stoqlh
    graph = _parse_graph(obj.get("graph"))
    terms = []
    for t in obj.get("two_local", []):
        extra = set(t) - {"qubits", "matrix"}
        if extra:
            raise ValidationError(f"unknown keys in two_local term: {sorted(extra)}")
        terms.append(((int(t["qubits"][0]), int(t["qubits"][1])),
                      np.asarray(t["matrix"], dtype=float)))
    diag = []
    for t in obj.get("k_local_diagonal", []):
        extra = set(t) - {"qubits", "bits", "weight"}
        if extra:
            raise ValidationError(f"unknown keys in k_local_diagonal term: {sorted(extra)}")
        subset = tuple(int(q) for q in t["qubits"])
        bits = str(t["bits"])
        if len(bits) != len(subset) or any(b not in "01" for b in bits):
            raise ValidationError(f"bad bitstring {bits!r} for subset {subset}")
        x = sum(int(bits[i]) << i for i in range(len(bits)))
        diag.append((subset, x, float(t["weight"])))
    return StoqLhHamiltonian(graph.node_count, tuple(terms), tuple(diag),
                             int(obj.get("locality", 2)),
                             float(obj.get("energy_shift", 0.0)))


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def model_to_json(model: ModelHamiltonian) -> str:
    return dumps(model_to_dict(model))


def model_from_json(text: str) -> ModelHamiltonian:
    return model_from_dict(json.loads(text))


def encoding_to_dict(enc: Encoding, chain_blocks=None) -> dict:
    if enc.kind == "basis-map":
        return {"schema_version": SCHEMA_VERSION, "kind": "basis-map",
                "pairs": [[i, s] for i, s in enumerate(enc.basis_map)]}
    if enc.kind == "chain-tensor":
        blocks = chain_blocks or []
        return {"schema_version": SCHEMA_VERSION, "kind": "chain-tensor",
                "chains": [{"length": m, "coupling": g} for (m, g) in blocks]}
    raise ValidationError("composite encodings serialize via their parts")
