import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from archprobe.errors import TraceError
from archprobe.traceparse import (
    LayerGraph,
    LayerSpec,
    TraceEvent,
    build_tree,
    emit_code,
    graph_from_dict,
    graph_to_dict,
    parse_emitted_header,
    parse_trace,
    reconstruct,
    reconstruct_from_text,
)


def ev(name, ts, dur, **args):
    return TraceEvent(name=name, ts=float(ts), dur=float(dur), args=args)


class TestParseTrace:
    def test_fixture_events(self, sequential_trace):
        events = parse_trace(sequential_trace)
        names = [e.name for e in events]
        assert "aten::conv2d" in names
        conv = next(e for e in events if e.name == "aten::conv2d")
        assert conv.input_dims()[0] == (1, 3, 224, 224)
        assert conv.input_dims()[1] == (64, 3, 7, 7)
        # the instantaneous marker lacks a duration and is skipped
        assert "cudaDeviceSynchronize" not in names

    def test_empty_array(self):
        assert parse_trace("[]") == []
        assert parse_trace('{"traceEvents": []}') == []

    def test_events_without_duration_skipped(self):
        events = parse_trace(
            '[{"name": "a", "ts": 0, "dur": 5}, {"name": "b", "ts": 1}]'
        )
        assert [e.name for e in events] == ["a"]

    def test_malformed_json(self):
        with pytest.raises(TraceError, match="malformed"):
            parse_trace("{not json")

    def test_missing_events_array(self):
        with pytest.raises(TraceError, match="traceEvents"):
            parse_trace('{"other": 1}')


class TestBuildTree:
    def test_containment(self):
        tree = build_tree([ev("A", 0, 100), ev("B", 10, 10)])
        assert len(tree.roots) == 1
        assert tree.roots[0].event.name == "A"
        assert tree.roots[0].children[0].event.name == "B"

    def test_disjoint_roots_ordered(self):
        tree = build_tree([ev("B", 20, 10), ev("A", 0, 10)])
        assert [r.event.name for r in tree.roots] == ["A", "B"]

    def test_three_level_nesting(self):
        tree = build_tree([ev("a", 0, 100), ev("b", 10, 50), ev("c", 20, 10)])
        a = tree.roots[0]
        assert a.children[0].event.name == "b"
        assert a.children[0].children[0].event.name == "c"

    def test_equal_intervals_nest_in_input_order(self):
        tree = build_tree([ev("first", 0, 10), ev("second", 0, 10)])
        assert tree.roots[0].event.name == "first"
        assert tree.roots[0].children[0].event.name == "second"

    def test_partial_overlap_truncated_with_warning(self, caplog):
        with caplog.at_level("WARNING"):
            tree = build_tree([ev("parent", 0, 10), ev("straddler", 5, 10)])
        assert "truncat" in caplog.text
        child = tree.roots[0].children[0]
        assert child.end == 10.0

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=0, max_value=50),
                st.integers(min_value=0, max_value=50),
            ),
            max_size=30,
        )
    )
    def test_laminar_family(self, intervals):
        events = [ev(f"e{i}", ts, dur) for i, (ts, dur) in enumerate(intervals)]
        tree = build_tree(events)

        spans = []

        def collect(node):
            spans.append((node.event.ts, node.end))
            for child in node.children:
                assert node.event.ts <= child.event.ts
                assert child.end <= node.end
                collect(child)

        for root in tree.roots:
            collect(root)
        for i, (a1, b1) in enumerate(spans):
            for a2, b2 in spans[i + 1 :]:
                nested = (a1 <= a2 and b2 <= b1) or (a2 <= a1 and b1 <= b2)
                disjoint = b1 <= a2 or b2 <= a1
                assert nested or disjoint


SEQUENTIAL_EXPECTED = [
    ("conv2d", {"in_channels": 3, "out_channels": 64, "kernel_size": [7, 7],
                "stride": [2, 2], "padding": [3, 3]}),
    ("batch_norm2d", {"num_features": 64}),
    ("relu", {}),
    ("max_pool2d", {"kernel_size": [3, 3], "stride": [2, 2], "padding": [1, 1]}),
    ("flatten", {}),
    ("linear", {"in_features": 512, "out_features": 10}),
]


class TestReconstruct:
    def test_sequential_fixture_exact(self, sequential_trace):
        graph = reconstruct_from_text(sequential_trace)
        assert [(l.type, l.hparams) for l in graph.layers] == SEQUENTIAL_EXPECTED
        assert graph.edges == ((0, 1), (1, 2), (2, 3), (3, 4), (4, 5))
        assert graph.layers[0].module_path == "model_inference/nn.Module: Conv2d_0"
        assert graph.layers[4].module_path == "model_inference"

    def test_branching_fixture_exact(self, branching_trace):
        graph = reconstruct_from_text(branching_trace)
        types = [l.type for l in graph.layers]
        assert types == ["conv2d", "conv2d", "conv2d", "concat", "relu"]
        assert sorted(graph.edges) == [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)]
        concat = graph.layers[3]
        indegree = sum(1 for _, dst in graph.edges if dst == concat.id)
        assert indegree == 2
        assert concat.hparams == {"dim": 1}
        # shape matching picked the right branches in input order
        assert graph.edges[2] == (1, 3)
        assert graph.edges[3] == (2, 3)

    def test_order_stability_under_permutation(self, sequential_trace, branching_trace):
        import random

        for text in (sequential_trace, branching_trace):
            events = parse_trace(text)
            baseline = reconstruct(build_tree(events))
            shuffled = list(events)
            random.Random(7).shuffle(shuffled)
            assert reconstruct(build_tree(shuffled)) == baseline

    def test_empty_tree(self):
        graph = reconstruct(build_tree([]))
        assert graph.layers == ()
        assert graph.edges == ()

    def test_unknown_aten_op_becomes_other(self):
        events = [ev("model", 0, 100), ev("aten::mystery", 10, 5)]
        graph = reconstruct(build_tree(events))
        assert [l.type for l in graph.layers] == ["other"]
        assert graph.layers[0].hparams == {"op": "aten::mystery"}

    def test_non_aten_leaves_ignored(self):
        events = [ev("model", 0, 100), ev("cudaLaunchKernel", 10, 5)]
        graph = reconstruct(build_tree(events))
        assert graph.layers == ()

    def test_kernels_inside_recognized_ops_not_double_counted(self, sequential_trace):
        graph = reconstruct_from_text(sequential_trace)
        assert len(graph.layers) == 6  # the cudnn kernel under conv2d is skipped


class TestEmitCode:
    def test_sequential_emit_contains_constructors(self, sequential_trace):
        graph = reconstruct_from_text(sequential_trace)
        code = emit_code(graph)
        assert "nn.Conv2d(3, 64, kernel_size=(7, 7), stride=(2, 2), padding=(3, 3))" in code
        assert "nn.Linear(512, 10)" in code
        assert "nn.BatchNorm2d(64)" in code
        assert code.index("nn.Conv2d") < code.index("nn.Linear")

    def test_round_trip_through_header(self, sequential_trace, branching_trace):
        for text in (sequential_trace, branching_trace):
            graph = reconstruct_from_text(text)
            assert parse_emitted_header(emit_code(graph)) == graph

    def test_empty_graph_emits_template(self):
        code = emit_code(LayerGraph(layers=(), edges=()))
        assert "return x" in code
        assert parse_emitted_header(code) == LayerGraph(layers=(), edges=())

    def test_other_layer_rendered_as_comment(self):
        graph = LayerGraph(
            layers=(LayerSpec(id=0, type="other", hparams={"op": "aten::mystery"},
                              module_path=""),),
            edges=(),
        )
        code = emit_code(graph)
        assert "# unsupported op: aten::mystery" in code
        assert "nn.Mystery" not in code
        assert parse_emitted_header(code) == graph

    def test_merge_layers_compose_in_forward(self, branching_trace):
        code = emit_code(reconstruct_from_text(branching_trace))
        assert "torch.cat([x1, x2], dim=1)" in code

    def test_missing_header_rejected(self):
        with pytest.raises(TraceError, match="header"):
            parse_emitted_header("import torch\n")


class TestGraphSerialization:
    def test_graph_dict_round_trip(self, branching_trace):
        graph = reconstruct_from_text(branching_trace)
        doc = json.loads(json.dumps(graph_to_dict(graph)))
        assert graph_from_dict(doc) == graph

    def test_edges_validated(self):
        with pytest.raises(TraceError):
            LayerGraph(
                layers=(LayerSpec(id=0, type="relu", hparams={}, module_path=""),),
                edges=((0, 5),),
            )
        with pytest.raises(TraceError, match="forward"):
            LayerGraph(
                layers=(
                    LayerSpec(id=0, type="relu", hparams={}, module_path=""),
                    LayerSpec(id=1, type="relu", hparams={}, module_path=""),
                ),
                edges=((1, 0),),
            )
