"""Graph serialization: JSON (canonical), GraphML and DOT views.

JSON is lossless for downstream use: it carries the node names, the signed
conditional-correlation weight of every active edge, model metadata and a
trace summary. GraphML and DOT are structural views with the same edges.
Edges are always emitted in lexicographic ``(i, j)`` order with ``i < j``,
so identical results serialize to identical bytes.
"""

from __future__ import annotations

import json
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .pipeline import LearnResult

FORMATS = ("json", "graphml", "dot")


def _edge_list(result: LearnResult) -> list[tuple[int, int, float]]:
    rows, cols = np.nonzero(np.triu(result.adjacency, 1))
    return [
        (int(i), int(j), float(result.cond_corr[i, j])) for i, j in zip(rows, cols)
    ]


def _default_names(p: int) -> list[str]:
    return [f"x{i}" for i in range(p)]


def graph_to_json(result: LearnResult, names=None, model_info=None) -> str:
    """Canonical JSON document for a learned graph."""
    p = result.adjacency.shape[0]
    names = list(names) if names is not None else _default_names(p)
    doc = {
        "nodes": names,
        "edges": [
            {"source": i, "target": j, "weight": w} for i, j, w in _edge_list(result)
        ],
        "model": dict(model_info) if model_info else {},
        "trace": {
            "iterations": result.n_iterations,
            "status": result.status,
            "final_objective": result.trace.values[-1],
            "final_grad_norm": result.trace.grad_norms[-1],
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def graph_to_graphml(result: LearnResult, names=None) -> str:
    """GraphML with a ``name`` node attribute and a double ``weight`` edge attribute."""
    p = result.adjacency.shape[0]
    names = list(names) if names is not None else _default_names(p)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="name" for="node" attr.name="name" attr.type="string"/>',
        '  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>',
        '  <graph id="G" edgedefault="undirected">',
    ]
    for i, name in enumerate(names):
        lines.append(f'    <node id="n{i}"><data key="name">{escape(name)}</data></node>')
    for i, j, w in _edge_list(result):
        lines.append(
            f'    <edge source="n{i}" target="n{j}"><data key="weight">{w!r}</data></edge>'
        )
    lines.extend(["  </graph>", "</graphml>"])
    return "\n".join(lines) + "\n"


def graph_to_dot(result: LearnResult, names=None) -> str:
    """Undirected DOT graph with weight labels on the edges."""
    p = result.adjacency.shape[0]
    names = list(names) if names is not None else _default_names(p)
    lines = ["graph G {"]
    for i, name in enumerate(names):
        lines.append(f"  {i} [label={quoteattr(name)}];")
    for i, j, w in _edge_list(result):
        lines.append(f'  {i} -- {j} [weight={w!r}, label="{w:.4f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_graph(result: LearnResult, path, fmt: str = "json", names=None, model_info=None) -> None:
    """Write a learned graph to ``path`` in the requested format.

    Raises
    ------
    ValueError
        On an unknown format name.
    OSError
        On I/O failure.
    """
    if fmt == "json":
        text = graph_to_json(result, names=names, model_info=model_info)
    elif fmt == "graphml":
        text = graph_to_graphml(result, names=names)
    elif fmt == "dot":
        text = graph_to_dot(result, names=names)
    else:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    with open(path, "w", newline="") as fh:
        fh.write(text)
