import pytest
from hypothesis import given, settings, strategies as st

from ranforensics.advisor import (
    CapabilityMatrix, ClaimClass, RequirementQuery, SupportLevel, load_matrix, progression, query,
)
from ranforensics.errors import AdvisorError

PLATFORMS = ["ns-O-RAN", "srsRAN ZMQ", "srsRAN-SDR", "srsRAN-O-RU/OFH", "OAI RFSim", "OAI-SDR",
             "OAI-O-RU/OFH", "Sionna", "Sionna-RT", "Sionna-RK", "FlexRAN", "ACAR", "AODT"]

# Independent hand transcription of the reference capability table (N native, A augmented, U unsupported).
HAND = {
    "WG4 7.2x fronthaul (HIL)":          "U U U N U U N U U U A N U",
    "WG4 7.2x fronthaul (software twin)": "U U U U U U U U U U A N N",
    "Shared cuPHY & cuMAC GPU kernels":  "U U U U U U U U U U U N N",
    "GPU L1 & slot-deadline MAC":        "U U U U U U U U U U U N N",
    "O-DU-low":                          "A A N N N N N A A N N N N",
    "O-DU-high":                         "A N N N N N N U U N N A A",
    "Near-RT E2 loop":                   "N N N N A A A U U A A A A",
    "5GC":                               "U A A A N N A U U N A A A",
    "UE realism":                        "A A A N A N N U U A N A A",
    "Offline AI-RAN":                    "A A A A A A A N N A A A A",
    "In-RAN AI":                         "U A A A A A A U U A A N N",
    "Per-TTI":                           "A A A A A A A U U A A N N",
    "Typical accessibility":             "N N N A N N A N N N A N A",
}
LETTER = {"N": SupportLevel.Native, "A": SupportLevel.Augmented, "U": SupportLevel.Unsupported}


@pytest.fixture(scope="module")
def matrix():
    return load_matrix()


def test_all_cells_match_hand_transcription(matrix):
    assert list(matrix.platforms) == PLATFORMS
    assert len(matrix.properties) == 13
    checked = 0
    for prop, letters in HAND.items():
        for platform, letter in zip(PLATFORMS, letters.split()):
            assert matrix.cell(platform, prop) is LETTER[letter], (platform, prop)
            checked += 1
    assert checked == 169


def test_cell_examples(matrix):
    assert matrix.cell("ACAR", "WG4 7.2x fronthaul (HIL)") is SupportLevel.Native
    assert matrix.cell("Sionna", "Near-RT E2 loop") is SupportLevel.Unsupported
    assert matrix.cell("FlexRAN", "WG4 7.2x fronthaul (HIL)") is SupportLevel.Augmented


def test_query_examples(matrix):
    assert set(query(matrix, [("WG4 7.2x fronthaul (HIL)", "native")])) == \
        {"srsRAN-O-RU/OFH", "OAI-O-RU/OFH", "ACAR"}
    assert set(query(matrix, [("Shared cuPHY & cuMAC GPU kernels", SupportLevel.Native)])) == {"ACAR", "AODT"}
    assert query(matrix, [("GPU L1 & slot-deadline MAC", "native"), ("Near-RT E2 loop", "native")]) == []


def test_query_ranking_is_deterministic(matrix):
    ranked = query(matrix, [("WG4 7.2x fronthaul (HIL)", "native")])
    assert ranked[0] == "ACAR"  # most native cells overall among the three


def test_unknown_property_lists_valid_names(matrix):
    with pytest.raises(AdvisorError, match="Typical accessibility"):
        query(matrix, [("teleportation", "native")])


def test_ambiguous_prefix(matrix):
    with pytest.raises(AdvisorError, match="ambiguous"):
        matrix.resolve_property("WG4")


def test_requirement_parse(matrix):
    q = RequirementQuery.parse(matrix, ["Near-RT E2 loop=augmented"])
    assert q.requirements == (("Near-RT E2 loop (E2AP, KPM/RC)", SupportLevel.Augmented),)
    with pytest.raises(AdvisorError):
        RequirementQuery.parse(matrix, ["no equals sign"])
    with pytest.raises(AdvisorError):
        RequirementQuery.parse(matrix, ["5GC=native", "5GC=augmented"])


def test_csv_round_trip(matrix):
    again = CapabilityMatrix.from_csv(matrix.to_csv())
    assert again == matrix


requirement_sets = st.lists(
    st.tuples(st.integers(0, 12), st.sampled_from(list(SupportLevel))), max_size=6, unique_by=lambda t: t[0]
)


@settings(max_examples=1000, deadline=None)
@given(requirement_sets, st.integers(0, 12), st.sampled_from(list(SupportLevel)))
def test_query_monotonicity(reqs, extra_prop, extra_level):
    m = load_matrix_cached()
    props = m.properties
    base = [(props[i], lvl) for i, lvl in reqs]
    result = set(query(m, base))
    # adding a requirement never adds platforms
    if extra_prop not in {i for i, _ in reqs}:
        assert set(query(m, base + [(props[extra_prop], extra_level)])) <= result
    # relaxing every level to Unsupported admits everything
    assert set(query(m, [(p, SupportLevel.Unsupported) for p, _ in base])) == set(m.platforms)
    # raising one level never adds platforms
    if base:
        p, lvl = base[0]
        raised = [(p, SupportLevel(min(lvl + 1, 2)))] + base[1:]
        assert set(query(m, raised)) <= result
    # every returned platform meets every minimum
    for pl in result:
        assert all(m.cells[(pl, p)] >= lvl for p, lvl in base)


_CACHE = []


def load_matrix_cached():
    if not _CACHE:
        _CACHE.append(load_matrix())
    return _CACHE[0]


@pytest.mark.parametrize("cc,expected", [
    ("FronthaulTiming", ["ns-O-RAN", "host-OS emulation", "Split-8 SDR/HIL", "O-RU/OFH"]),
    ("OfflineAi", ["Sionna PHY/SYS", "Sionna-RT"]),
    ("InRanAi", ["Sionna", "AODT", "ACAR"]),
])
def test_progressions(cc, expected):
    assert progression(cc).environments == expected


def test_every_claim_class_has_a_plan():
    for cc in ClaimClass:
        assert progression(cc).stages


def test_unknown_claim_class():
    with pytest.raises(AdvisorError):
        progression("Telepathy")
