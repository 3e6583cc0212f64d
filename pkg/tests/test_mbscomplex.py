from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings, strategies as st

from mbs.exactlin import QMatrix, is_zero
from mbs.mbscomplex import (
    BoundaryBlock,
    ComplexError,
    ComplexNotChain,
    FormBasisElement,
    LengthMismatch,
    assemble_boundary,
    chain_basis,
    cohomology,
    morse_bott_inequalities,
    orbit_form_basis,
    verify_d_squared,
    witten_dims,
)
from mbs.orbitdata import CriticalOrbit, GeneratorAction, ManifoldSpec, classify_orientability
from strategies import specs_with_blocks, valid_specs

TRIV = GeneratorAction(1, 1)
FLIP = GeneratorAction(-1, -1)


def three_orbit_spec():
    """Indices 0, 1, 2; one-dimensional orbits; everything orientable."""
    return ManifoldSpec(3, tuple(CriticalOrbit(lab, 1, i, F(i), (TRIV,)) for i, lab in enumerate("ABC")))


def degree_one_block(upper, lower):
    # rows/cols ordered (), (1,): only the dth1 -> dth1 entry is set
    return BoundaryBlock(upper, lower, QMatrix.from_rows([[0, 0], [0, 1]]))


def full(doc):
    return assemble_boundary(doc.spec, doc.blocks)


def test_orbit_form_basis_order():
    assert orbit_form_basis(0) == [()]
    assert orbit_form_basis(2) == [(), (1,), (2,), (1, 2)]
    assert orbit_form_basis(3)[4:] == [(1, 2), (1, 3), (2, 3), (1, 2, 3)]


def test_chain_basis_examples(docs):
    s2xt2, s3 = docs["s2xt2"].spec, docs["s3"].spec
    assert chain_basis(s2xt2, 2) == [FormBasisElement("S_0", (1, 2)), FormBasisElement("S_2", ())]
    assert chain_basis(s3, 1) == [FormBasisElement("S_0", (1,))]
    for doc in docs.values():
        assert chain_basis(doc.spec, doc.spec.manifold_dim + 1) == []
        assert chain_basis(doc.spec, -1) == []


def test_assemble_s3(docs):
    c = full(docs["s3"])
    assert c.boundaries[1] == QMatrix.from_rows([[-1]])
    assert is_zero(c.boundaries[0]) and is_zero(c.boundaries[2])


def test_assemble_s2xs1_all_zero(docs):
    assert all(is_zero(d) for d in full(docs["s2xs1"]).boundaries)


def test_grading_violation():
    spec = three_orbit_spec()
    bad = BoundaryBlock("C", "A", QMatrix.from_rows([[1, 0], [0, 0]]))  # degree 0 -> 0 with alpha 2
    with pytest.raises(ComplexError) as e:
        assemble_boundary(spec, [bad])
    assert e.value.kind == "GradingViolation"


@pytest.mark.parametrize("block, kind", [
    (BoundaryBlock("Z", "A", QMatrix.zeros(2, 2)), "UnknownOrbit"),
    (BoundaryBlock("A", "B", QMatrix.zeros(2, 2)), "IndexOrderViolation"),
    (BoundaryBlock("B", "A", QMatrix.zeros(3, 2)), "BlockShape"),
])
def test_block_errors(block, kind):
    with pytest.raises(ComplexError) as e:
        assemble_boundary(three_orbit_spec(), [block])
    assert e.value.kind == kind


def test_f_must_descend_along_block():
    spec = ManifoldSpec(3, (CriticalOrbit("A", 1, 0, F(5), (TRIV,)), CriticalOrbit("B", 1, 1, F(1), (TRIV,))))
    with pytest.raises(ComplexError) as e:
        assemble_boundary(spec, [degree_one_block("B", "A")])
    assert e.value.kind == "IndexOrderViolation"


def test_nonorientable_endpoint_and_duplicates(docs):
    spec = docs["s3"].spec
    with pytest.raises(ComplexError) as e:
        assemble_boundary(spec, [BoundaryBlock("S_1", "S_0", QMatrix.zeros(2, 2))])
    assert e.value.kind == "NonorientableEndpoint"
    b = docs["s3"].blocks[0]
    with pytest.raises(ComplexError) as e:
        assemble_boundary(spec, [b, b])
    assert e.value.kind == "DuplicateBlock"


def test_d_squared_detector_handcrafted():
    # By hand: C^1 = [dth1@A, 1@B], C^2 = [dth1@B, 1@C], C^3 = [dth1@C].
    # d^1 = [[-1, 0], [0, 0]], d^2 = [[-1, 0]], so d^2 d^1 = [[1, 0]].
    c = assemble_boundary(three_orbit_spec(), [degree_one_block("B", "A"), degree_one_block("C", "B")])
    assert c.boundaries[1] == QMatrix.from_rows([[-1, 0], [0, 0]])
    assert c.boundaries[2] == QMatrix.from_rows([[-1, 0]])
    check = verify_d_squared(c)
    assert not check.ok
    assert check.first_failure == (1, 0, 0) and check.value == 1
    with pytest.raises(ComplexNotChain):
        cohomology(c, three_orbit_spec())


def test_d_squared_ok_examples(docs):
    for doc in docs.values():
        assert verify_d_squared(full(doc)).ok
    zero = assemble_boundary(three_orbit_spec(), [])
    assert verify_d_squared(zero).ok


@pytest.mark.parametrize("name, betti", [
    ("t2", (1, 2, 1)), ("s2xs1", (1, 1, 1, 1)), ("s2xt2", (1, 2, 2, 2, 1)), ("s3", (1, 0, 0, 1)),
])
def test_golden_cohomology(docs, name, betti):
    rep = cohomology(full(docs[name]), docs[name].spec)
    assert rep.betti == betti
    assert rep.matches_reference is True


def test_witten_dims_examples(docs):
    assert witten_dims(docs["s3"].spec) == [1, 1, 1, 1]
    assert witten_dims(docs["s2xt2"].spec) == [1, 2, 2, 2, 1]
    assert witten_dims(ManifoldSpec(3, ())) == [0, 0, 0, 0]


def test_inequalities_s2xs1(docs):
    rep = morse_bott_inequalities(docs["s2xs1"].spec, (1, 1, 1, 1))
    assert [(r.lhs, r.rhs) for r in rep.per_n] == [(1, 1), (0, 0), (1, 1), (0, 0)]
    assert rep.all_hold and rep.equality_at_top


def test_inequalities_s3(docs):
    rep = morse_bott_inequalities(docs["s3"].spec, (1, 0, 0, 1))
    assert [(r.lhs, r.rhs) for r in rep.per_n] == [(1, 1), (0, -1), (1, 1), (0, 0)]
    assert rep.all_hold and rep.equality_at_top


def test_inequality_violation_and_length(docs):
    rep = morse_bott_inequalities(docs["s3"].spec, (1, 5, 0, 1))
    assert rep.first_violation() == 1 and (rep.per_n[1].lhs, rep.per_n[1].rhs) == (0, 4)
    with pytest.raises(LengthMismatch):
        morse_bott_inequalities(docs["s3"].spec, (1, 0, 1))


@pytest.mark.parametrize("s", [F(2), F(-1), F(7, 3)])
def test_scale_invariance_s3(docs, s):
    doc = docs["s3"]
    c = assemble_boundary(doc.spec, [b.scaled(s) for b in doc.blocks])
    assert cohomology(c, doc.spec) == cohomology(full(doc), doc.spec)


@pytest.mark.parametrize("name", ["t2", "s2xs1", "s2xt2"])
def test_zero_boundary_gives_equality_everywhere(docs, name):
    doc = docs[name]
    rep = morse_bott_inequalities(doc.spec, cohomology(full(doc), doc.spec).betti)
    assert all(r.lhs == r.rhs for r in rep.per_n)


def test_empty_spec_is_zero_complex():
    spec = ManifoldSpec(2, ())
    rep = cohomology(assemble_boundary(spec, []), spec)
    assert rep.betti == (0, 0, 0) and rep.euler_characteristic == 0


@given(valid_specs())
def test_chain_dims_equal_witten_dims(spec):
    dims = [len(chain_basis(spec, k)) for k in range(spec.manifold_dim + 1)]
    assert dims == witten_dims(spec)


@given(valid_specs(), st.integers(0, 3), st.integers(0, 7))
def test_nonorientable_orbit_changes_nothing(spec, n, idx):
    assume(idx + n <= spec.manifold_dim)
    gens = (FLIP,) + (TRIV,) * (n - 1) if n else ()
    assume(n > 0)
    extra = CriticalOrbit("NONOR", n, idx, F(0), gens)
    bigger = ManifoldSpec(spec.manifold_dim, spec.orbits + (extra,))
    assert not classify_orientability(extra)
    for k in range(spec.manifold_dim + 2):
        assert chain_basis(bigger, k) == chain_basis(spec, k)
    assert witten_dims(bigger) == witten_dims(spec)
    c0, c1 = assemble_boundary(spec, []), assemble_boundary(bigger, [])
    assert c0 == c1
    assert cohomology(c0, spec) == cohomology(c1, bigger)


@settings(max_examples=150, deadline=None)
@given(specs_with_blocks())
def test_euler_identity_and_betti_bounds(data):
    spec, blocks = data
    c = assemble_boundary(spec, blocks)
    assume(verify_d_squared(c).ok)
    rep = cohomology(c, spec)
    assert sum((-1) ** k * b for k, b in enumerate(rep.betti)) == rep.euler_characteristic
    assert all(b <= d for b, d in zip(rep.betti, rep.chain_dims))
    # alternating counts: inequalities hold, with equality at the top degree
    ineq = morse_bott_inequalities(spec, rep.betti)
    assert ineq.equality_at_top


@given(specs_with_blocks())
def test_no_d0_entries(data):
    # every nonzero entry must come from some block with alpha >= 1
    spec, blocks = data
    c = assemble_boundary(spec, blocks)
    allowed = {(b.upper_label, b.lower_label) for b in blocks}
    for k, d in enumerate(c.boundaries):
        for r, col, _ in d.nonzero():
            tgt, src = c.bases[k + 1][r], c.bases[k][col]
            assert tgt.orbit_label != src.orbit_label
            assert (tgt.orbit_label, src.orbit_label) in allowed
