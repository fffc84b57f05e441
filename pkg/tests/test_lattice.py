import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dirac2d.errors import DomainError, InvalidSizeError, LengthMismatchError, OutOfDomainError
from dirac2d.fiber import band_values
from dirac2d.lattice import (
    Potential,
    TableComponent,
    apply_coboundary,
    apply_coboundary_adjoint,
    assemble_hamiltonian,
    build_lattice,
    load_potential,
    loop_state,
    momentum_grid,
    potential_trace_norm,
)


@pytest.mark.parametrize("L,boundary,dim", [(4, "periodic", 48), (4, "open", 40), (7, "open", 49 + 84)])
def test_total_dim(L, boundary, dim):
    box = build_lattice(L, boundary)
    assert box.total_dim == dim
    assert box.n_edges == (2 * L * L if boundary == "periodic" else 2 * L * (L - 1))


def test_degenerate_size():
    with pytest.raises(InvalidSizeError):
        build_lattice(1, "periodic")


@pytest.mark.parametrize("boundary", ["periodic", "open"])
def test_edges_oriented_forward(boundary):
    box = build_lattice(5, boundary)
    D = box.coboundary_matrix.toarray()
    # each edge row holds one -1 (tail) and one +1 (head)
    assert np.all((D == 1).sum(axis=1) == 1) and np.all((D == -1).sum(axis=1) == 1)
    tx, ty = box.edge_tail_coords()
    head = D.argmax(axis=1)
    hx, hy = head % 5, head // 5
    step = np.where(box.edge_dir == 0, (hx - tx) % 5, (hy - ty) % 5)
    assert np.all(step == 1)


def test_coboundary_constant_is_zero():
    box = build_lattice(6, "periodic")
    assert np.abs(apply_coboundary(box, np.ones(36))).max() == 0


def test_coboundary_vertex_indicator_periodic():
    # brute force: +1 on the two A+ edges entering x0, -1 on the two leaving
    L = 5
    box = build_lattice(L, "periodic")
    x0, y0 = 2, 3
    f = np.zeros(L * L)
    f[box.vertex_index(x0, y0)] = 1.0
    g = apply_coboundary(box, f)
    expected = np.zeros(box.n_edges)
    off = box.n_vertices
    expected[box.edge_index((x0 - 1) % L, y0, 0) - off] = 1
    expected[box.edge_index(x0, (y0 - 1) % L, 1) - off] = 1
    expected[box.edge_index(x0, y0, 0) - off] = -1
    expected[box.edge_index(x0, y0, 1) - off] = -1
    assert np.array_equal(g, expected)


def test_adjoint_brute_force_four_term_sum():
    rng = np.random.default_rng(3)
    for boundary in ("periodic", "open"):
        L = 5
        box = build_lattice(L, boundary)
        g = rng.normal(size=box.n_edges)
        out = apply_coboundary_adjoint(box, g)
        off = box.n_vertices
        brute = np.zeros(L * L)
        for x in range(L):
            for y in range(L):
                s = 0.0
                # d*g(x) = -sum over edges at x of g(e) oriented away from x
                for d, (dx, dy) in enumerate([(1, 0), (0, 1)]):
                    if boundary == "periodic" or (x + dx < L and y + dy < L):
                        s -= g[box.edge_index(x, y, d) - off]
                    px, py = x - dx, y - dy
                    if boundary == "periodic" or (px >= 0 and py >= 0):
                        s += g[box.edge_index(px % L, py % L, d) - off]
                brute[box.vertex_index(x, y)] = s
        assert np.abs(out - brute).max() <= 1e-15


@settings(max_examples=30, deadline=None)
@given(L=st.integers(2, 7), boundary=st.sampled_from(["periodic", "open"]), seed=st.integers(0, 2**31))
def test_adjointness_property(L, boundary, seed):
    rng = np.random.default_rng(seed)
    box = build_lattice(L, boundary)
    f = rng.normal(size=box.n_vertices)
    g = rng.normal(size=box.n_edges)
    lhs = apply_coboundary(box, f) @ g
    rhs = f @ apply_coboundary_adjoint(box, g)
    assert abs(lhs - rhs) <= 1e-13 * max(1.0, abs(lhs))


def test_length_mismatch():
    box = build_lattice(4, "open")
    with pytest.raises(LengthMismatchError):
        apply_coboundary(box, np.zeros(15))
    with pytest.raises(LengthMismatchError):
        apply_coboundary_adjoint(box, np.zeros(box.n_edges + 1))


def test_adjoint_kills_loop_state():
    box = build_lattice(6, "periodic")
    f = loop_state(box, 2, 4)
    assert np.abs(apply_coboundary_adjoint(box, f.edge_values)).max() == 0


@pytest.mark.parametrize("m", [0.0, 1.0])
def test_floquet_L4(m):
    box = build_lattice(4, "periodic")
    H = assemble_hamiltonian(box, m)
    z = band_values(momentum_grid(4), m)
    expected = np.sort(np.concatenate(z))
    assert np.abs(np.sort(np.linalg.eigvalsh(H.toarray())) - expected).max() <= 1e-10
    if m == 1.0:
        assert np.isclose(np.linalg.eigvalsh(H.toarray()), -1, atol=1e-10).sum() >= 16


@pytest.mark.parametrize("boundary", ["periodic", "open"])
def test_massless_spectrum_symmetric(boundary):
    H = assemble_hamiltonian(build_lattice(5, boundary), 0.0).toarray()
    ev = np.linalg.eigvalsh(H)
    assert np.abs(np.sort(ev) - np.sort(-ev)).max() <= 1e-10
    assert ev.max() <= np.sqrt(8) + 1e-12 and ev.min() >= -np.sqrt(8) - 1e-12


def test_rank_one_interlacing():
    box = build_lattice(5, "open")
    pot = Potential.vertex_impulse(0.7)
    e0 = np.linalg.eigvalsh(assemble_hamiltonian(box, 1.0).toarray())
    e1 = np.linalg.eigvalsh(assemble_hamiltonian(box, 1.0, pot, 1).toarray())
    assert np.all(e1 >= e0 - 1e-12)
    assert np.all(e1[:-1] <= e0[1:] + 1e-12)


def test_structure_and_symmetry():
    box = build_lattice(6, "open")
    H = assemble_hamiltonian(box, 1.3, Potential.power_decay(1, 2, 4), 1)
    assert H.is_symmetric()
    assert H.max_row_nnz() <= 5
    H0 = assemble_hamiltonian(box, 1.3)
    assert H0.max_row_nnz() <= 5


def test_square_is_block_laplacian():
    m = 0.8
    for boundary in ("periodic", "open"):
        box = build_lattice(5, boundary)
        D = box.coboundary_matrix.toarray()
        H = assemble_hamiltonian(box, m).toarray()
        nv = box.n_vertices
        sq = H @ H
        assert np.abs(sq[:nv, :nv] - (D.T @ D + m * m * np.eye(nv))).max() <= 1e-14
        assert np.abs(sq[nv:, nv:] - (D @ D.T + m * m * np.eye(box.n_edges))).max() <= 1e-14
        assert np.abs(sq[:nv, nv:]).max() <= 1e-14


def test_negative_inputs_rejected():
    box = build_lattice(4, "open")
    with pytest.raises(DomainError):
        assemble_hamiltonian(box, -1.0)
    bad = Potential.from_table({"v1": {(0, 0): -0.5}})
    with pytest.raises(DomainError):
        assemble_hamiltonian(box, 1.0, bad, 1)


def test_loop_state_kernel_and_norm():
    box = build_lattice(6, "open")
    for m in (0.0, 1.0, 2.5):
        H = assemble_hamiltonian(box, m).matrix
        for x, y in [(0, 0), (2, 3), (4, 4)]:
            f = loop_state(box, x, y).as_vector()
            assert np.linalg.norm(H @ f + m * f) <= 1e-14
    f = loop_state(box, 1, 1)
    assert f.inner(f) == 4
    assert loop_state(box, 1, 1).inner(loop_state(box, 3, 3)) == 0
    with pytest.raises(OutOfDomainError):
        loop_state(box, 5, 2)


def test_trace_norm():
    box = build_lattice(8, "open")
    assert potential_trace_norm(box, Potential.vertex_impulse(2.5)) == 2.5
    assert potential_trace_norm(box, Potential.from_table({"v3": {(1, 0): 0.75}})) == 0.75


def test_trace_norm_power_family_brute_force():
    L = 64
    box = build_lattice(L, "open")
    pot = Potential.power_decay(1.0, 1.0, 4.0)
    c = L // 2
    total = 0.0
    for x in range(L):
        for y in range(L):
            w = (1.0 + (x - c) ** 2 + (y - c) ** 2) ** -2.0
            if x < L - 1:
                total += w
            if y < L - 1:
                total += w
    assert abs(potential_trace_norm(box, pot) - total) <= 1e-12


def test_load_potential(tmp_path):
    p = tmp_path / "pot.txt"
    p.write_text("# impulse plus power tails\nv1 0 0 1.5\npower 1 2 4\n")
    pot = load_potential(p)
    box = build_lattice(5, "open")
    vert, edge = pot.on_box(box)
    assert vert[box.vertex_index(2, 2)] == 1.5 and vert.sum() == 1.5
    assert edge[box.edge_index(2, 2, 0) - box.n_vertices] == 1.0
    assert edge[box.edge_index(2, 2, 1) - box.n_vertices] == 2.0
    p.write_text("v2 1 0 0.5\nv3 0 1 0.25\n")
    pot = load_potential(p)
    assert isinstance(pot.v2, TableComponent)
    assert potential_trace_norm(box, pot) == 0.75
    p.write_text("v9 1 0 0.5\n")
    with pytest.raises(DomainError):
        load_potential(p)
