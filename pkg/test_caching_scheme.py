"""放置、XOR 傳送與解碼"""

from fractions import Fraction

import numpy as np
import pytest

from errors import DecodeError, InputError
from models import BatchHeader
from services.caching_service import (
    DeliveryBatch,
    DemandVector,
    PacketLibrary,
    build_placement,
    build_user_cache,
    check_memory,
    decode_user,
    decode_user_packets,
    encode_delivery,
    reference_encode,
    scheme_params,
)
from services.graph_service import Graph, Matching, empty_graph, random_graph
from services.partition_service import RsPartition, greedy_partition
from storage import load_batch, save_batch


def decode_all(g, partition, library, demands):
    pm = build_placement(g)
    batch = encode_delivery(partition, DemandVector(demands), library)
    caches = [build_user_cache(k, pm, library) for k in range(g.vertex_count)]
    return [decode_user(k, batch, pm, caches[k], partition, g) for k in range(g.vertex_count)]


def test_placement_examples(c6, k16, edgeless4):
    assert build_placement(c6).cached_packets[0] == frozenset({0, 2, 3, 4})
    assert all(build_placement(k16).cached_packets[j] == frozenset({j}) for j in range(16))
    assert all(packets == frozenset(range(4)) for packets in build_placement(edgeless4).cached_packets)


@pytest.mark.parametrize("ratio, expected", [
    (Fraction(2, 3), True),
    (Fraction(1, 2), False),
    (Fraction(1), True),
])
def test_check_memory_c6(c6, ratio, expected):
    assert check_memory(build_placement(c6), 2, ratio) is expected


def test_check_memory_rejects_bad_ratio(c6):
    with pytest.raises(InputError) as exc:
        check_memory(build_placement(c6), 2, Fraction(3, 2))
    assert exc.value.code == "bad_cache_ratio"


def test_single_edge_payload():
    g = Graph(2, [(0, 1)])
    partition = RsPartition([Matching([(0, 1)])])
    library = PacketLibrary.random(2, 2, 8, seed=5)
    batch = encode_delivery(partition, DemandVector([1, 0]), library)
    expected = np.bitwise_xor(library.packet(0, 0), library.packet(1, 1))
    assert batch.payload(0) == expected.tobytes()
    assert decode_all(g, partition, library, [1, 0]) == [library.reassemble(1), library.reassemble(0)]


def test_zero_library_gives_zero_payloads(c6_partition):
    batch = encode_delivery(c6_partition, DemandVector([0, 1, 0, 1, 0, 1]), PacketLibrary.zeros(2, 6, 4))
    assert batch.t == 3
    assert not batch.payloads.any()


def test_encode_matches_reference(c6_partition):
    library = PacketLibrary.random(2, 6, 4, seed=0)
    demands = [0, 1, 0, 1, 0, 1]
    batch = encode_delivery(c6_partition, DemandVector(demands), library)
    assert [batch.payload(q) for q in range(batch.t)] == reference_encode(c6_partition, demands, library)


def test_encode_matches_reference_on_random_graphs():
    for seed in range(5):
        g = random_graph(14, 0.4, seed)
        partition = greedy_partition(g)
        library = PacketLibrary.random(3, 14, 5, seed=seed)
        demands = np.random.default_rng(seed).integers(0, 3, size=14).tolist()
        batch = encode_delivery(partition, DemandVector(demands), library, workers=3)
        assert [batch.payload(q) for q in range(batch.t)] == reference_encode(partition, demands, library)


def test_encoding_is_linear(c6_partition):
    first = PacketLibrary.random(2, 6, 4, seed=1)
    second = PacketLibrary.random(2, 6, 4, seed=2)
    demands = DemandVector([1, 1, 0, 0, 1, 0])
    combined = encode_delivery(c6_partition, demands, first.xor(second)).payloads
    separate = np.bitwise_xor(
        encode_delivery(c6_partition, demands, first).payloads,
        encode_delivery(c6_partition, demands, second).payloads,
    )
    assert (combined == separate).all()


def test_c6_walkthrough_user0(c6, c6_partition):
    """使用者 0 快取 {0,2,3,4}，由匹配 {(0,1),(3,4)} 的 XOR 還原封包 1"""
    library = PacketLibrary.random(2, 6, 4, seed=3)
    demands = DemandVector([0, 1, 1, 0, 1, 0])
    pm = build_placement(c6)
    cache = build_user_cache(0, pm, library)
    batch = encode_delivery(c6_partition, demands, library)
    assert c6_partition.matching_of(0, 1) == 0
    recovered = np.bitwise_xor.reduce([
        batch.payloads[0],
        cache.packet(0, demands[1]),
        cache.packet(3, demands[4]),
        cache.packet(4, demands[3]),
    ])
    assert (recovered == library.packet(1, demands[0])).all()
    packets, consumed = decode_user_packets(0, batch, pm, cache, c6_partition, c6)
    assert consumed == 2
    assert (packets == library.data[demands[0]]).all()


def test_k16_user0_recovers_from_singletons(k16, k16_partition):
    library = PacketLibrary.random(3, 16, 4, seed=9)
    demands = DemandVector([f % 3 for f in range(16)])
    pm = build_placement(k16)
    cache = build_user_cache(0, pm, library)
    batch = encode_delivery(k16_partition, demands, library)
    for f in range(1, 16):
        q = k16_partition.matching_of(0, f)
        assert (np.bitwise_xor(batch.payloads[q], cache.packet(0, demands[f])) == library.packet(f, demands[0])).all()
    assert decode_user(0, batch, pm, cache, k16_partition, k16) == library.reassemble(demands[0])


def test_edgeless_decodes_from_cache(edgeless4):
    library = PacketLibrary.random(2, 4, 4, seed=4)
    partition = greedy_partition(edgeless4)
    pm = build_placement(edgeless4)
    batch = encode_delivery(partition, DemandVector([1, 0, 1, 1]), library)
    assert batch.t == 0 and batch.total_bytes() == 0
    packets, consumed = decode_user_packets(2, batch, pm, build_user_cache(2, pm, library), partition, edgeless4)
    assert consumed == 0
    assert (packets == library.data[1]).all()


def test_single_user_degenerate():
    g = empty_graph(1)
    partition = greedy_partition(g)
    library = PacketLibrary.random(1, 1, 6, seed=0)
    assert decode_all(g, partition, library, [0]) == [library.reassemble(0)]
    params = scheme_params(g, partition)
    assert (params.F, params.rate, params.mn_required) == (1, "0", "1")


def test_c6_exhaustive_demands(c6, c6_partition):
    library = PacketLibrary.random(2, 6, 4, seed=0)
    for code in range(2 ** 6):
        demands = [(code >> k) & 1 for k in range(6)]
        files = decode_all(c6, c6_partition, library, demands)
        assert files == [library.reassemble(d) for d in demands]


def test_cached_bytes_accounting(c6):
    library = PacketLibrary.random(3, 6, 4, seed=0)
    pm = build_placement(c6)
    for k in range(6):
        assert build_user_cache(k, pm, library).cached_bytes() == (6 - 2) * 3 * 4


def test_missing_matching_is_reported(c6, c6_partition):
    partial = RsPartition(c6_partition.matchings[:2])
    library = PacketLibrary.random(2, 6, 4, seed=0)
    pm = build_placement(c6)
    batch = encode_delivery(partial, DemandVector([0] * 6), library)
    with pytest.raises(DecodeError) as exc:
        decode_user_packets(0, batch, pm, build_user_cache(0, pm, library), partial, c6)
    assert exc.value.code == "edge_not_covered"
    assert exc.value.context["f"] == 5
    assert exc.value.exit_code == 3


def test_missing_cache_packet_is_reported(c6, c6_partition):
    library = PacketLibrary.random(2, 6, 4, seed=0)
    pm = build_placement(c6)
    cache = build_user_cache(0, pm, library)
    del cache.store[3]
    batch = encode_delivery(c6_partition, DemandVector([0] * 6), library)
    with pytest.raises(DecodeError) as exc:
        decode_user_packets(0, batch, pm, cache, c6_partition, c6)
    assert exc.value.code == "packet_missing"


@pytest.mark.parametrize("demands", [[0, 1, 0], [0, 1, 0, 1, 0, 2], [0, 1, 0, 1, 0, -1]])
def test_bad_demands(c6_partition, demands):
    with pytest.raises(InputError) as exc:
        encode_delivery(c6_partition, DemandVector(demands), PacketLibrary.zeros(2, 6, 4))
    assert exc.value.code == "bad_demands"


def test_library_dimension_mismatch(c6_partition):
    with pytest.raises(InputError):
        encode_delivery(c6_partition, DemandVector([0] * 4), PacketLibrary.zeros(2, 4, 4))


def test_from_files_padding_and_reassembly():
    blobs = [bytes(range(10)), b"x" * 24]
    library = PacketLibrary.from_files(blobs, 6, 4, names=["a.bin", "b.bin"])
    assert library.N == 2 and library.F == 6
    assert library.original_lengths == (10, 24)
    assert library.reassemble(0) == blobs[0]
    assert library.reassemble(1) == blobs[1]
    assert not library.data[0].reshape(-1)[10:].any()
    assert library.manifest().source_paths == ["a.bin", "b.bin"]


def test_from_files_rejects_oversized():
    with pytest.raises(InputError) as exc:
        PacketLibrary.from_files([b"x" * 25], 6, 4, names=["big.bin"])
    assert exc.value.code == "file_too_large"
    assert "big.bin" in exc.value.detail and "24" in exc.value.detail


def test_scheme_params(c6, c6_partition, k16, k16_partition, edgeless4):
    c6_params = scheme_params(c6, c6_partition)
    assert (c6_params.rate, c6_params.F, c6_params.mn_required) == ("1/2", 6, "2/3")
    assert c6_params.rate_exact == Fraction(1, 2)
    k16_params = scheme_params(k16, k16_partition)
    assert (k16_params.rate, k16_params.F, k16_params.mn_required) == ("15/2", 16, "1/16")
    assert k16_params.rate_value == 7.5
    assert scheme_params(edgeless4, greedy_partition(edgeless4)).rate == "0"


def test_batch_replay(tmp_path, c6, c6_partition):
    library = PacketLibrary.random(2, 6, 4, seed=8)
    demands = DemandVector([1, 0, 1, 1, 0, 0])
    batch = encode_delivery(c6_partition, demands, library)
    path = tmp_path / "delivery.batch"
    save_batch(batch, str(path))
    replayed = load_batch(str(path))
    assert replayed.header == batch.header
    assert replayed.header.partition_id == c6_partition.partition_id
    assert (replayed.payloads == batch.payloads).all()
    pm = build_placement(c6)
    for k in range(6):
        cache = build_user_cache(k, pm, library)
        assert decode_user(k, replayed, pm, cache, c6_partition, c6) == library.reassemble(demands[k])


def test_batch_rejects_mismatched_width():
    header = BatchHeader(partition_id="0" * 16, K=2, N=1, B=4, demands=[0, 0])
    with pytest.raises(InputError):
        DeliveryBatch(header, np.zeros((1, 3), dtype=np.uint8))


def test_replay_against_other_partition_is_rejected(tmp_path, c6, c6_partition):
    library = PacketLibrary.random(2, 6, 4, seed=8)
    path = tmp_path / "delivery.batch"
    save_batch(encode_delivery(c6_partition, DemandVector([0, 1, 0, 1, 0, 1]), library), str(path))
    replayed = load_batch(str(path))
    reordered = greedy_partition(c6)
    assert reordered.partition_id != c6_partition.partition_id
    pm = build_placement(c6)
    for k in range(6):
        with pytest.raises(DecodeError) as exc:
            decode_user(k, replayed, pm, build_user_cache(k, pm, library), reordered, c6)
        assert exc.value.code == "partition_mismatch"
        assert exc.value.context["k"] == k


def test_truncated_batch_is_rejected(c6, c6_partition):
    library = PacketLibrary.random(2, 6, 4, seed=0)
    batch = encode_delivery(c6_partition, DemandVector([0] * 6), library)
    truncated = DeliveryBatch(batch.header, batch.payloads[:2])
    pm = build_placement(c6)
    with pytest.raises(DecodeError) as exc:
        decode_user_packets(0, truncated, pm, build_user_cache(0, pm, library), c6_partition, c6)
    assert exc.value.code == "payload_count"
    assert exc.value.context["q"] == 2


def test_batch_dimensions_must_match_cache(c6, c6_partition):
    batch = encode_delivery(c6_partition, DemandVector([0] * 6), PacketLibrary.random(2, 6, 4, seed=0))
    wider = PacketLibrary.random(3, 6, 4, seed=0)
    pm = build_placement(c6)
    with pytest.raises(DecodeError) as exc:
        decode_user_packets(1, batch, pm, build_user_cache(1, pm, wider), c6_partition, c6)
    assert exc.value.code == "dimension_mismatch"


def test_out_of_range_batch_demand_is_a_decode_error(c6, c6_partition):
    library = PacketLibrary.random(2, 6, 4, seed=0)
    batch = encode_delivery(c6_partition, DemandVector([0] * 6), library)
    header = batch.header.model_copy(update={"demands": [0, 0, 0, 0, 0, 7]})
    pm = build_placement(c6)
    with pytest.raises(DecodeError) as exc:
        decode_user_packets(0, DeliveryBatch(header, batch.payloads), pm,
                            build_user_cache(0, pm, library), c6_partition, c6)
    assert exc.value.code == "bad_demands"


@pytest.mark.parametrize("demands", [[0, 0, 0, 0, 0, 7], [0, 0, 0]])
def test_load_batch_validates_header_demands(tmp_path, c6_partition, demands):
    library = PacketLibrary.random(2, 6, 4, seed=0)
    batch = encode_delivery(c6_partition, DemandVector([0] * 6), library)
    header = batch.header.model_copy(update={"demands": demands})
    path = tmp_path / "bad.batch"
    save_batch(DeliveryBatch(header, batch.payloads), str(path))
    with pytest.raises(InputError) as exc:
        load_batch(str(path))
    assert exc.value.code == "bad_demands"
