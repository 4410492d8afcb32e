"""propagate: superpixel graph, connected components, mask rendering."""

from collections import deque

import numpy as np
import pytest

from repseg import (Keypoint, RepetitionSegmenter, SuperpixelGraph,
                    build_graph, connected_components, render_mask)
from repseg.accumulator import Hotspot
from repseg.errors import InvalidParam
from repseg.evalkit import synth
from repseg.splash import Splash
from repseg.superpixel import SuperpixelMap


def grid_spx(assignment):
    arr = np.asarray(assignment, dtype=np.int32)
    return SuperpixelMap(assignment=arr, count=int(arr.max()) + 1)


def one_vector_splash(center_id, neighbor_id, vec=(1.0, 0.0)):
    return Splash(center=center_id,
                  neighbors=np.array([neighbor_id]),
                  vectors=np.array([vec], dtype=np.float64),
                  distances=np.zeros(1))


def bfs_components(nodes, edges):
    """Independent BFS oracle: component id per node, 1..C by smallest node."""
    adjacency = {n: set() for n in nodes}
    for a, b in edges:
        adjacency[a].add(b)
        adjacency[b].add(a)
    seen = set()
    groups = []
    for start in nodes:
        if start in seen:
            continue
        queue = deque([start])
        seen.add(start)
        group = []
        while queue:
            n = queue.popleft()
            group.append(n)
            for m in adjacency[n]:
                if m not in seen:
                    seen.add(m)
                    queue.append(m)
        groups.append(group)
    groups.sort(key=min)
    return {n: cid for cid, group in enumerate(groups, start=1) for n in group}


class TestBuildGraph:
    def test_single_link_makes_one_edge(self):
        spx = grid_spx([[0, 0, 1, 1]])
        kps = [Keypoint(x=0, y=0, id=0), Keypoint(x=3, y=0, id=1)]
        splashes = [one_vector_splash(0, 1, (3.0, 0.0))]
        g = build_graph(spx, [Hotspot(splash=0, score=1.0)], splashes, kps)
        assert g.nodes == {0, 1}
        assert g.edges == {(0, 1): 1}

    def test_same_superpixel_gives_node_but_no_self_loop(self):
        spx = grid_spx([[0, 0, 0, 0]])
        kps = [Keypoint(x=0, y=0, id=0), Keypoint(x=3, y=0, id=1)]
        splashes = [one_vector_splash(0, 1, (3.0, 0.0))]
        g = build_graph(spx, [Hotspot(splash=0, score=1.0)], splashes, kps)
        assert g.nodes == {0}
        assert g.edges == {}

    def test_min_support_drops_edge_keeps_nodes(self):
        spx = grid_spx([[0, 0, 1, 1]])
        kps = [Keypoint(x=0, y=0, id=0), Keypoint(x=3, y=0, id=1)]
        splashes = [one_vector_splash(0, 1, (3.0, 0.0))]
        g = build_graph(spx, [Hotspot(splash=0, score=1.0)], splashes, kps,
                        min_support=2)
        assert g.nodes == {0, 1}
        assert g.edges == {}

    def test_multiplicity_counts_supporting_links(self):
        spx = grid_spx([[0, 0, 1, 1]])
        kps = [Keypoint(x=0, y=0, id=0), Keypoint(x=3, y=0, id=1)]
        splashes = [one_vector_splash(0, 1, (3.0, 0.0)),
                    one_vector_splash(1, 0, (-3.0, 0.0))]
        hotspots = [Hotspot(splash=0, score=1.0), Hotspot(splash=1, score=1.0)]
        g = build_graph(spx, hotspots, splashes, kps)
        assert g.edges == {(0, 1): 2}

    def test_invalid_min_support_rejected(self):
        spx = grid_spx([[0]])
        with pytest.raises(InvalidParam):
            build_graph(spx, [], [], [], min_support=0)


class TestConnectedComponents:
    def test_chain_is_one_component(self):
        g = SuperpixelGraph(nodes={1, 2, 3}, edges={(1, 2): 1, (2, 3): 1})
        assert connected_components(g) == {1: 1, 2: 1, 3: 1}

    def test_isolated_nodes_are_singletons(self):
        g = SuperpixelGraph(nodes={0, 5}, edges={})
        assert connected_components(g) == {0: 1, 5: 2}

    def test_component_ids_ordered_by_smallest_member(self):
        g = SuperpixelGraph(nodes={2, 7, 9, 4}, edges={(7, 9): 1})
        got = connected_components(g)
        assert got == {2: 1, 4: 2, 7: 3, 9: 3}

    def test_matches_bfs_oracle_on_random_graphs(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 50))
            nodes = set(map(int, rng.choice(200, size=n, replace=False)))
            node_list = sorted(nodes)
            edges = {}
            for _ in range(int(rng.integers(0, 60))):
                a, b = rng.choice(node_list, size=2)
                if a != b:
                    edges[(min(int(a), int(b)), max(int(a), int(b)))] = 1
            g = SuperpixelGraph(nodes=nodes, edges=edges)
            assert connected_components(g) == bfs_components(nodes, edges)


class TestRenderMask:
    def test_no_hotspots_gives_zero_mask(self):
        spx = grid_spx([[0, 1], [2, 3]])
        mask = render_mask(spx, {})
        assert (mask == 0).all()

    def test_superpixels_painted_with_component_labels(self):
        spx = grid_spx([[0, 1], [2, 3]])
        mask = render_mask(spx, {1: 1, 3: 2})
        assert mask.tolist() == [[0, 1], [0, 2]]

    def test_3x3_tiling_single_label_covers_icons(self):
        img, gt = synth("cross", 3, 3, 64, 0, 256, seed=0, gt_margin=0)
        # coherent level: superpixel size on the order of the icon arm
        est = RepetitionSegmenter(n_superpixels=1500)
        mask = est.fit_predict(img)
        icons = gt.levels["instance"] > 0
        labels, counts = np.unique(mask[mask > 0], return_counts=True)
        assert len(labels) > 0
        largest = labels[np.argmax(counts)]
        covered = ((mask == largest) & icons).sum() / icons.sum()
        assert covered >= 0.8
        background = ~icons
        spill = ((mask == largest) & background).sum() / background.sum()
        assert spill <= 0.1

    def test_two_pattern_families_get_distinct_labels(self):
        # icons tiled in the left half, stripes tiled in the right half
        rng = np.random.Generator(np.random.Philox(5))
        img = (205 + 4 * rng.standard_normal((256, 256))).clip(0, 255) \
            .astype(np.uint8)
        for cy in (64, 128, 192):
            for cx in (48, 96):
                img[cy - 8:cy + 8, cx - 8:cx + 8] = 30
        for cy in (64, 128, 192):
            for cx in (168, 216):
                img[cy - 12:cy + 12, cx - 2:cx + 2] = 90
        mask = RepetitionSegmenter(n_superpixels=600).fit_predict(img)
        left = set(np.unique(mask[:, :128])) - {0}
        right = set(np.unique(mask[:, 128:])) - {0}
        assert left and right
        # each family's label stays essentially confined to its half
        for label in left - right:
            sel = mask == label
            assert sel[:, :140].sum() >= 0.9 * sel.sum()
        for label in right - left:
            sel = mask == label
            assert sel[:, 116:].sum() >= 0.9 * sel.sum()
        assert left != right

    def test_mask_labels_are_dense_and_match_component_count(self):
        img, _ = synth("square", 3, 3, 64, 0, 256, seed=1)
        est = RepetitionSegmenter()
        mask = est.fit_predict(img)
        labels = np.unique(mask)
        n_components = max(est.components_.values(), default=0)
        assert set(labels) <= set(range(n_components + 1))
        nonzero = set(labels) - {0}
        assert nonzero == set(est.components_.values())
