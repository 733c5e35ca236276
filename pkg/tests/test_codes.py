import numpy as np
import pytest

from ldpcfloor import codes
from ldpcfloor.codes import CodeError


class TestArrayCode:
    def test_structure_3_5(self):
        H = codes.array_code(3, 5)
        assert (H.m, H.n) == (15, 25)
        # first block row is block-diagonal identity placement
        assert H.check_neighbors[0] == [0, 5, 10, 15, 20]
        # every check has degree p, every variable degree gamma
        assert all(len(r) == 5 for r in H.check_neighbors)

    def test_rank_and_rate(self):
        for gamma, p, rate in ((3, 5, 0.48), (3, 23, 0.8733), (3, 61, 0.9514)):
            H = codes.array_code(gamma, p)
            assert H.rank() == gamma * p - (gamma - 1)
            assert abs(H.rate() - rate) < 5e-5

    def test_prime_required(self):
        with pytest.raises(CodeError):
            codes.array_code(3, 9)
        with pytest.raises(CodeError):
            codes.array_code(3, 1)

    def test_gamma_range(self):
        with pytest.raises(CodeError):
            codes.array_code(6, 5)

    def test_circulant_shifts(self):
        H = codes.array_code(2, 5)
        # block (1, j): row r hits column j*5 + (r + j) mod 5
        for j in range(5):
            for r in range(5):
                assert j * 5 + (r + j) % 5 in H.check_neighbors[5 + r]


class TestRank:
    def test_identity(self):
        H = codes.ParityCheckMatrix(3, 3, [[0], [1], [2]])
        assert H.rank() == 3

    def test_dependent_rows(self):
        # row2 = row0 + row1 over GF(2)
        H = codes.ParityCheckMatrix(3, 4, [[0, 1], [1, 2], [0, 2]])
        assert H.rank() == 2

    def test_matches_dense_gf2_elimination(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            m, n = 12, 20
            dense = rng.integers(0, 2, size=(m, n))
            dense[:, 0] = 1  # avoid empty rows
            rows = [list(np.flatnonzero(dense[i])) for i in range(m)]
            H = codes.ParityCheckMatrix(m, n, rows)
            # independent elimination oracle
            A = dense.copy() % 2
            r = 0
            for c in range(n):
                piv = next((i for i in range(r, m) if A[i, c]), None)
                if piv is None:
                    continue
                A[[r, piv]] = A[[piv, r]]
                for i in range(m):
                    if i != r and A[i, c]:
                        A[i] ^= A[r]
                r += 1
            assert H.rank() == r


class TestCodewords:
    def test_weight6_count_3_5(self):
        H = codes.array_code(3, 5)
        found = codes.find_weight_w_codewords(H, 6)
        assert len(found) == 50
        assert len(found) == codes.count_weight_w_codewords_array(3, 5, 6)
        for sup in found[:5]:
            bits = np.zeros(25, dtype=np.uint8)
            bits[list(sup)] = 1
            assert H.is_codeword(bits)

    def test_no_weight_below_6(self):
        H = codes.array_code(3, 5)
        for w in (1, 2, 3, 4, 5):
            assert codes.find_weight_w_codewords(H, w) == []

    def test_closed_form_large(self):
        assert codes.count_weight_w_codewords_array(3, 61, 6) == 2_195_390

    def test_guard(self):
        H = codes.array_code(3, 23)
        with pytest.raises(CodeError):
            codes.find_weight_w_codewords(H, 6, guard=10_000)


class TestAlist:
    def test_round_trip(self, tmp_path):
        H = codes.array_code(3, 5)
        path = tmp_path / "h.alist"
        codes.store_alist(H, path)
        H2 = codes.load_alist(path)
        assert (H2.m, H2.n) == (H.m, H.n)
        assert H2.check_neighbors == H.check_neighbors

    def test_irregular_round_trip(self, tmp_path):
        H = codes.ParityCheckMatrix(3, 5, [[0, 1, 2], [2, 3], [0, 3, 4]])
        path = tmp_path / "h.alist"
        codes.store_alist(H, path)
        assert codes.load_alist(path).check_neighbors == H.check_neighbors

    def test_parse_errors_located(self, tmp_path):
        path = tmp_path / "bad.alist"
        path.write_text("4 2\n1 2\n1 1 1 1\n2 2\n1\n1\n2\nx\n")
        with pytest.raises(CodeError, match="line 8"):
            codes.load_alist(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "short.alist"
        path.write_text("4 2\n1 2\n1 1 1 1\n")
        with pytest.raises(CodeError, match="truncated"):
            codes.load_alist(path)


def test_syndrome():
    H = codes.array_code(3, 5)
    bits = np.zeros(25, dtype=np.uint8)
    assert H.is_codeword(bits)
    bits[3] = 1
    assert not H.is_codeword(bits)
    assert H.syndrome(bits).sum() == 3  # one flip trips gamma checks
