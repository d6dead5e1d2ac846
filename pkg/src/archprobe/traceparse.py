"""Framework-profiler trace decompilation.

Exported traces are flat event lists: named spans with microsecond start
and duration, where nesting by time-interval containment recovers the
module/operator hierarchy. Recognized operator events become layers with
hyperparameters pulled from their recorded input dimensions and concrete
arguments; everything above them in the tree forms the module path.

Dataflow edges are reconstructed structurally: consecutive layers chain
within a module scope, and add/concat events become merge nodes whose
inputs come from the most recent unconsumed branch outputs, matched by
shape when the trace records output dimensions and by recency otherwise.
Exact for sequential models, best effort (with warnings) for branches.
"""

from __future__ import annotations

import ast
import json
import logging
from dataclasses import dataclass, field
from importlib import resources

from .errors import TraceError

log = logging.getLogger(__name__)

_HEADER_BEGIN = "# === archprobe layer graph ==="
_HEADER_END = "# === end layer graph ==="

_DIMS_KEYS = ("Input Dims", "Input dims", "input_dims")
_CONCRETE_KEYS = ("Concrete Inputs", "Concrete Args", "concrete_inputs")
_OUTPUT_DIMS_KEYS = ("Output Dims", "Output dims", "output_dims")


def load_op_mapping() -> dict[str, str]:
    """Operator name -> layer type, shipped as versioned data."""
    with resources.files("archprobe.data").joinpath("aten_ops.json").open() as fh:
        return dict(json.load(fh)["ops"])


@dataclass(frozen=True)
class TraceEvent:
    name: str
    ts: float
    dur: float
    category: str = ""
    args: dict = field(default_factory=dict)

    @property
    def end(self) -> float:
        return self.ts + self.dur

    def input_dims(self):
        return _dims_from_args(self.args, _DIMS_KEYS)

    def output_dims(self):
        return _dims_from_args(self.args, _OUTPUT_DIMS_KEYS)

    def concrete_inputs(self):
        for key in _CONCRETE_KEYS:
            if key in self.args:
                out = []
                for item in self.args[key]:
                    try:
                        out.append(ast.literal_eval(item) if isinstance(item, str) else item)
                    except (ValueError, SyntaxError):
                        out.append(None)
                return out
        return None


def _dims_from_args(args, keys):
    for key in keys:
        if key in args:
            dims = []
            for entry in args[key]:
                if isinstance(entry, (list, tuple)):
                    dims.append(tuple(int(v) for v in entry))
                else:
                    dims.append(())
            return tuple(dims)
    return None


def parse_trace(text: str) -> list[TraceEvent]:
    """Extract complete-duration events from a trace JSON document.

    Accepts either a top-level event array or an object with a
    ``traceEvents`` array; events without a duration are skipped.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TraceError(f"malformed trace JSON: {exc}") from None
    if isinstance(doc, list):
        raw = doc
    elif isinstance(doc, dict) and isinstance(doc.get("traceEvents"), list):
        raw = doc["traceEvents"]
    else:
        raise TraceError("trace document has no event array (traceEvents)")
    events = []
    for entry in raw:
        if not isinstance(entry, dict) or "dur" not in entry:
            continue
        if "name" not in entry or "ts" not in entry:
            continue
        dur = float(entry["dur"])
        if dur < 0:
            continue
        events.append(
            TraceEvent(
                name=str(entry["name"]),
                ts=float(entry["ts"]),
                dur=dur,
                category=str(entry.get("cat", "")),
                args=entry.get("args") or {},
            )
        )
    return events


@dataclass
class TreeNode:
    event: TraceEvent
    end: float  # possibly truncated to the parent interval
    children: list = field(default_factory=list)


@dataclass(frozen=True)
class OpEventTree:
    roots: tuple


def build_tree(events) -> OpEventTree:
    """Nest events by interval containment.

    Longer spans open first at equal timestamps, equal intervals nest in
    deterministic (name, then input) order, and a child running past its
    parent is truncated to the parent boundary with a warning.
    """
    indexed = sorted(
        enumerate(events), key=lambda pair: (pair[1].ts, -pair[1].dur, pair[1].name, pair[0])
    )
    roots: list[TreeNode] = []
    stack: list[TreeNode] = []
    for _, ev in indexed:
        while stack and ev.ts >= stack[-1].end:
            stack.pop()
        end = ev.end
        if stack and end > stack[-1].end:
            log.warning(
                "event %r [%s, %s) overlaps its parent boundary %s; truncating",
                ev.name,
                ev.ts,
                end,
                stack[-1].end,
            )
            end = stack[-1].end
        node = TreeNode(event=ev, end=end)
        if stack:
            stack[-1].children.append(node)
        else:
            roots.append(node)
        stack.append(node)
    return OpEventTree(roots=tuple(roots))


@dataclass(frozen=True)
class LayerSpec:
    id: int
    type: str
    hparams: dict
    module_path: str
    output_dims: tuple = ()


@dataclass(frozen=True)
class LayerGraph:
    layers: tuple[LayerSpec, ...]
    edges: tuple[tuple[int, int], ...]  # producer id -> consumer id

    def __post_init__(self):
        ids = {layer.id for layer in self.layers}
        for src, dst in self.edges:
            if src not in ids or dst not in ids:
                raise TraceError(f"edge ({src}, {dst}) references unknown layer")
            if src >= dst:
                raise TraceError("edges must point forward in layer order")


def _as_pair(value):
    if isinstance(value, int):
        return [value, value]
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return None


def _extract_hparams(layer_type: str, ev: TraceEvent) -> dict:
    dims = ev.input_dims() or ()
    concrete = ev.concrete_inputs() or []

    def dim(i):
        return dims[i] if i < len(dims) else ()

    def conc(i):
        return concrete[i] if i < len(concrete) else None

    h: dict = {}
    if layer_type == "conv2d":
        if len(dim(0)) >= 2:
            h["in_channels"] = int(dim(0)[1])
        if len(dim(1)) >= 4:
            h["out_channels"] = int(dim(1)[0])
            h["kernel_size"] = [int(dim(1)[2]), int(dim(1)[3])]
        for key, pos in (("stride", 3), ("padding", 4)):
            pair = _as_pair(conc(pos))
            if pair is not None:
                h[key] = pair
    elif layer_type == "batch_norm2d":
        if len(dim(0)) >= 2:
            h["num_features"] = int(dim(0)[1])
    elif layer_type == "linear":
        if len(dim(1)) >= 2:
            h["in_features"] = int(dim(1)[1])
            h["out_features"] = int(dim(1)[0])
    elif layer_type == "max_pool2d":
        for key, pos in (("kernel_size", 1), ("stride", 2), ("padding", 3)):
            pair = _as_pair(conc(pos))
            if pair is not None:
                h[key] = pair
    elif layer_type == "avg_pool2d":
        for key, pos in (("kernel_size", 1), ("stride", 2)):
            pair = _as_pair(conc(pos))
            if pair is not None:
                h[key] = pair
    elif layer_type == "adaptive_avg_pool2d":
        pair = _as_pair(conc(1))
        if pair is not None:
            h["output_size"] = pair
    elif layer_type == "dropout":
        if isinstance(conc(1), (int, float)):
            h["p"] = float(conc(1))
    elif layer_type == "concat":
        if isinstance(conc(1), int):
            h["dim"] = int(conc(1))
    return h


class _GraphBuilder:
    """Turns recognized ops into layers and reconstructs dataflow edges.

    Each scope keeps a list of dangling outputs (layer ids not yet
    consumed within it); a finished scope hands its leftovers to the
    parent, so parallel branch results coexist until a merge takes them.
    Producers are picked by output-shape match when the trace recorded
    output dimensions, by recency otherwise.
    """

    def __init__(self, mapping):
        self.mapping = mapping
        self.layers: list[LayerSpec] = []
        self.edges: list[tuple[int, int]] = []
        self.dangling: dict[tuple, list[int]] = {(): []}

    def _candidates(self, scope: tuple) -> list[int]:
        """Dangling outputs visible from a scope, newest first."""
        seen = []
        for depth in range(len(scope), -1, -1):
            seen.extend(self.dangling.get(scope[:depth], ()))
        return sorted(set(seen), reverse=True)

    def _pick_producer(self, candidates, input_shape, ev):
        if input_shape and any(self.layers[c].output_dims for c in candidates):
            for c in candidates:
                if input_shape in self.layers[c].output_dims:
                    return c
            log.warning(
                "no dangling output matches %r input shape %s; using the most recent",
                ev.name,
                input_shape,
            )
        return candidates[0]

    def _add_layer(self, layer_type, ev: TraceEvent, scope: tuple):
        lid = len(self.layers)
        spec = LayerSpec(
            id=lid,
            type=layer_type,
            hparams=_extract_hparams(layer_type, ev)
            if layer_type != "other"
            else {"op": ev.name},
            module_path="/".join(scope),
            output_dims=ev.output_dims() or (),
        )
        self.layers.append(spec)
        candidates = self._candidates(scope)

        if layer_type in ("add", "concat"):
            chosen = self._match_merge_inputs(candidates, ev)
            for src in chosen:
                self.edges.append((src, lid))
            for src in chosen:
                for outputs in self.dangling.values():
                    if src in outputs:
                        outputs.remove(src)
        elif candidates:
            dims = ev.input_dims() or ()
            shape = dims[0] if dims and dims[0] else None
            self.edges.append((self._pick_producer(candidates, shape, ev), lid))

        # a direct layer supersedes everything dangling in its own scope
        self.dangling[scope] = [lid]

    def _match_merge_inputs(self, candidates, ev):
        wanted = [d for d in (ev.input_dims() or ()) if d]
        n_inputs = max(2, len(wanted)) if wanted else 2
        if wanted and all(self.layers[c].output_dims for c in candidates):
            chosen = []
            remaining = list(candidates)
            for shape in wanted:
                hit = next(
                    (c for c in remaining if shape in self.layers[c].output_dims), None
                )
                if hit is None:
                    log.warning(
                        "merge %r: no producer matches input shape %s; "
                        "falling back to recency",
                        ev.name,
                        shape,
                    )
                    break
                chosen.append(hit)
                remaining.remove(hit)
            else:
                return chosen
        elif wanted and candidates:
            log.warning("merge %r inputs matched by recency, not shape", ev.name)
        chosen = candidates[:n_inputs]
        if len(chosen) < n_inputs:
            log.warning(
                "merge %r expected %d inputs but only %d producers are available",
                ev.name,
                n_inputs,
                len(chosen),
            )
        return chosen

    def visit(self, node: TreeNode, scope: tuple):
        name = node.event.name
        if name in self.mapping:
            self._add_layer(self.mapping[name], node.event, scope)
            return  # children of a recognized op are implementation detail
        if not node.children:
            if name.startswith("aten::"):
                self._add_layer("other", node.event, scope)
            return
        inner = scope + (name,)
        self.dangling.setdefault(inner, [])
        for child in node.children:
            self.visit(child, inner)
        # hand this scope's unconsumed outputs to the parent
        leftovers = self.dangling.pop(inner, [])
        self.dangling.setdefault(scope, []).extend(leftovers)


def reconstruct(tree: OpEventTree, mapping: dict[str, str] | None = None) -> LayerGraph:
    """Layer graph from an event tree.

    Recognized operator events become layers in time order; unrecognized
    leaf ``aten::`` ops are kept as ``other`` layers; unrecognized inner
    events contribute module scope only.
    """
    builder = _GraphBuilder(mapping if mapping is not None else load_op_mapping())
    for root in tree.roots:
        builder.visit(root, ())
    return LayerGraph(layers=tuple(builder.layers), edges=tuple(builder.edges))


def reconstruct_from_text(text: str, mapping: dict[str, str] | None = None) -> LayerGraph:
    return reconstruct(build_tree(parse_trace(text)), mapping)


# ---------------------------------------------------------------------------
# serialization and code emission

def graph_to_dict(graph: LayerGraph) -> dict:
    return {
        "layers": [
            {
                "id": layer.id,
                "type": layer.type,
                "hparams": layer.hparams,
                "module_path": layer.module_path,
                "output_dims": [list(d) for d in layer.output_dims],
            }
            for layer in graph.layers
        ],
        "edges": [list(e) for e in graph.edges],
    }


def graph_from_dict(doc: dict) -> LayerGraph:
    layers = tuple(
        LayerSpec(
            id=int(entry["id"]),
            type=entry["type"],
            hparams=entry.get("hparams", {}),
            module_path=entry.get("module_path", ""),
            output_dims=tuple(tuple(int(v) for v in d) for d in entry.get("output_dims", [])),
        )
        for entry in doc["layers"]
    )
    edges = tuple((int(a), int(b)) for a, b in doc.get("edges", []))
    return LayerGraph(layers=layers, edges=edges)


_CONSTRUCTORS = {
    "conv2d": ("Conv2d", ("in_channels", "out_channels"), ("kernel_size", "stride", "padding")),
    "batch_norm2d": ("BatchNorm2d", ("num_features",), ()),
    "relu": ("ReLU", (), ()),
    "max_pool2d": ("MaxPool2d", (), ("kernel_size", "stride", "padding")),
    "avg_pool2d": ("AvgPool2d", (), ("kernel_size", "stride")),
    "adaptive_avg_pool2d": ("AdaptiveAvgPool2d", (), ("output_size",)),
    "linear": ("Linear", ("in_features", "out_features"), ()),
    "dropout": ("Dropout", (), ("p",)),
    "flatten": ("Flatten", (), ()),
}


def _fmt(value):
    if isinstance(value, list):
        return "(" + ", ".join(str(v) for v in value) + ")"
    return repr(value) if isinstance(value, float) else str(value)


def _constructor_line(layer: LayerSpec) -> str | None:
    if layer.type in ("add", "concat"):
        return None
    if layer.type == "other":
        return f"# unsupported op: {layer.hparams.get('op', '?')}"
    cls, positional, keyword = _CONSTRUCTORS[layer.type]
    args = [_fmt(layer.hparams[k]) for k in positional if k in layer.hparams]
    args += [f"{k}={_fmt(layer.hparams[k])}" for k in keyword if k in layer.hparams]
    return f"self.layer{layer.id} = nn.{cls}({', '.join(args)})"


def emit_code(graph: LayerGraph) -> str:
    """Deterministic source rendering with a machine-readable header.

    The header embeds the full graph as JSON, so parsing the emission
    reproduces the LayerGraph exactly.
    """
    header = [
        _HEADER_BEGIN,
        "# " + json.dumps(graph_to_dict(graph), sort_keys=True, separators=(",", ":")),
        _HEADER_END,
    ]
    body = [
        "import torch",
        "from torch import nn",
        "",
        "",
        "class ReconstructedNet(nn.Module):",
        "    def __init__(self):",
        "        super().__init__()",
    ]
    init_lines = []
    for layer in graph.layers:
        line = _constructor_line(layer)
        if line is not None:
            init_lines.append("        " + line)
    if not init_lines:
        init_lines.append("        pass")
    body += init_lines

    inputs: dict[int, list[int]] = {layer.id: [] for layer in graph.layers}
    for src, dst in graph.edges:
        inputs[dst].append(src)

    body += ["", "    def forward(self, x):"]
    if not graph.layers:
        body.append("        return x")
    else:
        for layer in graph.layers:
            srcs = inputs[layer.id]
            names = [f"x{i}" for i in srcs] if srcs else ["x"]
            if layer.type == "add":
                expr = " + ".join(names)
            elif layer.type == "concat":
                dim = layer.hparams.get("dim", 1)
                expr = f"torch.cat([{', '.join(names)}], dim={dim})"
            elif layer.type == "other":
                expr = f"{names[0]}  # unsupported op: {layer.hparams.get('op', '?')}"
            else:
                expr = f"self.layer{layer.id}({names[0]})"
            body.append(f"        x{layer.id} = {expr}")
        body.append(f"        return x{graph.layers[-1].id}")
    return "\n".join(header + body) + "\n"


def parse_emitted_header(text: str) -> LayerGraph:
    lines = text.splitlines()
    try:
        start = lines.index(_HEADER_BEGIN)
        end = lines.index(_HEADER_END)
    except ValueError:
        raise TraceError("emitted code lacks the layer-graph header") from None
    payload = "\n".join(line[2:] for line in lines[start + 1 : end])
    return graph_from_dict(json.loads(payload))
