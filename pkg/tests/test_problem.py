from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest

from cavity_queens import _kernels
from cavity_queens.problem import (
    BoardTooLarge,
    Configuration,
    Instance,
    InvalidInstance,
    brute_force_solve,
    classical_energy,
    count_attacking_pairs,
    diagonal_penalty,
    interaction_matrix,
    paper_instance,
    pin_bonus,
)


def backtracking_queens(n):
    """Independent N-queens enumerator (column, sum and difference sets)."""
    out = []

    def place(row, cols, used_c, used_s, used_d):
        if row == n:
            out.append(tuple(cols))
            return
        for c in range(1, n + 1):
            if c in used_c or c + row in used_s or c - row in used_d:
                continue
            place(row + 1, cols + [c], used_c | {c}, used_s | {c + row}, used_d | {c - row})

    place(0, [], set(), set(), set())
    return sorted(out)


class TestInteractionMatrix:
    def test_same_site_is_three(self):
        assert interaction_matrix(5)[1, 1, 1, 1] == 3

    def test_shared_difference_diagonal(self):
        assert interaction_matrix(5)[0, 0, 2, 2] == 1

    def test_knight_move_is_zero(self):
        assert interaction_matrix(5)[0, 0, 1, 2] == 0

    @pytest.mark.parametrize("n", range(1, 9))
    def test_symmetric(self, n):
        a = interaction_matrix(n)
        assert np.array_equal(a, a.transpose(2, 3, 0, 1))

    def test_entries_follow_rules(self):
        n = 4
        a = interaction_matrix(n)
        for i, j, k, l in product(range(1, n + 1), repeat=4):
            if (i, j) == (k, l):
                want = 3
            elif i == k or i + j == k + l or i - j == k - l:
                want = 1
            else:
                want = 0
            assert a[i - 1, j - 1, k - 1, l - 1] == want

    def test_rejects_empty_board(self):
        with pytest.raises(ValueError):
            interaction_matrix(0)


class TestTables:
    def test_diagonal_penalty_single_hit(self):
        d = diagonal_penalty(paper_instance())
        assert d[0, 1] == 1  # site (1,2): plus index 2 excluded, minus index 4 free

    def test_diagonal_penalty_free_site(self):
        assert diagonal_penalty(paper_instance())[0, 0] == 0

    def test_diagonal_penalty_double_hit(self):
        # site (2,5): plus index 6 and minus index 2 are both excluded
        assert diagonal_penalty(paper_instance())[1, 4] == 2

    def test_diagonal_penalty_empty(self):
        assert not diagonal_penalty(Instance(5)).any()

    def test_pin_bonus_single(self):
        t = pin_bonus(paper_instance())
        assert t[2, 4] == 1 and t.sum() == 1

    def test_pin_bonus_empty(self):
        assert not pin_bonus(Instance(5)).any()

    def test_pin_bonus_two(self):
        t = pin_bonus(Instance(5, pinned=frozenset({(1, 1), (5, 5)})))
        assert t.sum() == 2 and t[0, 0] == 1 and t[4, 4] == 1


class TestEnergy:
    def test_solution_energy(self):
        assert classical_energy(Instance(5), (1, 4, 2, 5, 3)) == 15

    def test_all_in_one_column(self):
        assert classical_energy(Instance(5), (1, 1, 1, 1, 1)) == 35

    def test_pin_only(self):
        inst = Instance(5, pinned=frozenset({(3, 5)}), u_q=0, u_d=0, u_t=2)
        assert classical_energy(inst, (1, 4, 2, 5, 3)) == -2

    def test_pair_identity(self):
        inst = Instance(4, u_q=1.5)
        for cols in product(range(1, 5), repeat=4):
            e = classical_energy(inst, cols)
            assert e - 3 * 1.5 * 4 == pytest.approx(2 * 1.5 * count_attacking_pairs(cols))

    def test_wrong_size(self):
        with pytest.raises(ValueError):
            classical_energy(Instance(4), (1, 2, 3))


class TestAttackingPairs:
    def test_solution(self):
        assert count_attacking_pairs((1, 4, 2, 5, 3)) == 0

    def test_single_column(self):
        assert count_attacking_pairs((1, 1, 1, 1, 1)) == 10

    def test_against_pair_scan(self):
        cols = (1, 3, 2, 5, 4)
        want = 0
        for a, b in combinations(range(5), 2):
            ra, rb = a + 1, b + 1
            ca, cb = cols[a], cols[b]
            if ca == cb or abs(ca - cb) == abs(ra - rb):
                want += 1
        assert count_attacking_pairs(cols) == want


class TestOracle:
    def test_plain_five_queens(self):
        sols = brute_force_solve(Instance(5))
        assert len(sols) == 10
        assert all(count_attacking_pairs(c) == 0 for c in sols)
        assert [c.columns for c in sols] == backtracking_queens(5)

    @pytest.mark.parametrize("n", [4, 6])
    def test_matches_backtracking(self, n):
        assert [c.columns for c in brute_force_solve(Instance(n))] == backtracking_queens(n)

    def test_excluded_without_pin_has_two(self):
        assert len(brute_force_solve(paper_instance(pinned=False))) == 2

    def test_pinned_unique(self):
        assert brute_force_solve(paper_instance()) == [Configuration((1, 4, 2, 5, 3))]

    def test_guard(self):
        with pytest.raises(BoardTooLarge):
            brute_force_solve(Instance(9))

    def test_mirror_closed(self):
        sols = {c.columns for c in brute_force_solve(Instance(6))}
        assert {tuple(7 - x for x in c) for c in sols} == sols

    def test_sorted_and_all_ties(self):
        sols = brute_force_solve(Instance(3))
        assert sols == sorted(sols)
        energies = {classical_energy(Instance(3), c) for c in sols}
        assert len(energies) == 1

    def test_exact_rational_ties(self):
        inst = Instance(3, excluded_plus=frozenset({3}), u_q=Fraction(1, 3), u_d=Fraction(2, 3))
        energies = {cols: classical_energy(inst, cols) for cols in product(range(1, 4), repeat=3)}
        best = min(energies.values())
        want = sorted(c for c, e in energies.items() if e == best)
        assert [c.columns for c in brute_force_solve(inst)] == want
        assert len(want) > 1

    def test_numpy_and_numba_paths_agree(self):
        inst = paper_instance()
        a = brute_force_solve(inst, use_numba=True)
        b = brute_force_solve(inst, use_numba=False)
        assert a == b
        d, t = diagonal_penalty(inst), pin_bonus(inst)
        for x, y in zip(_kernels.config_features(5, 0, 3125, d, t, use_numba=True),
                        _kernels.config_features(5, 0, 3125, d, t, use_numba=False)):
            assert np.array_equal(x, y)


class TestInstance:
    def test_pin_on_excluded_diagonal(self):
        with pytest.raises(InvalidInstance):
            Instance(5, excluded_plus=frozenset({7}), pinned=frozenset({(3, 5)}))

    def test_diagonal_out_of_range(self):
        with pytest.raises(InvalidInstance):
            Instance(5, excluded_minus=frozenset({10}))

    def test_pin_off_board(self):
        with pytest.raises(InvalidInstance):
            Instance(3, pinned=frozenset({(4, 1)}))

    def test_negative_energy(self):
        with pytest.raises(InvalidInstance):
            Instance(3, u_q=-1)

    def test_configuration_range(self):
        with pytest.raises(ValueError):
            Configuration((1, 4))
