"""Mapper/demapper contracts, spectral-efficiency formulas, Walsh codes."""

import numpy as np
import pytest

from ddmodlab.errors import (
    CodebookMismatch,
    IndexOutOfRange,
    InvalidSize,
    WrongBitCount,
)
from ddmodlab.grid import DdGridConfig, Rng
from ddmodlab.schemes import (
    Cim,
    Mbm,
    Otfs,
    Qsm,
    Sm,
    Ssk,
    bits_per_frame,
    bits_per_grid,
    branch_count,
    demap_frame,
    map_frame,
    record_fields,
    scheme_label,
    walsh_codes,
)

GRID22 = DdGridConfig(2, 2)
GRID44 = DdGridConfig(4, 4)


# Spectral-efficiency table: (scheme, grid, expected bits/frame) for the
# three standard cases of each scheme.
SE_TABLE = [
    (Otfs(4), GRID22, 8),
    (Otfs(4), GRID44, 32),
    (Otfs(8), GRID44, 48),
    (Ssk(n_antennas=2), GRID22, 4),
    (Ssk(n_antennas=4), GRID44, 32),
    (Ssk(n_antennas=8), GRID44, 48),
    (Sm(n_antennas=2, mod_order=4), GRID22, 12),
    (Sm(n_antennas=4, mod_order=4), GRID44, 64),
    (Sm(n_antennas=8, mod_order=8), GRID44, 96),
    (Qsm(n_antennas=2, mod_order=4), GRID22, 16),
    (Qsm(n_antennas=4, mod_order=4), GRID44, 96),
    (Qsm(n_antennas=8, mod_order=8), GRID44, 144),
    (Mbm(n_mirrors=2, mod_order=4), GRID22, 16),
    (Mbm(n_mirrors=4, mod_order=4), GRID44, 96),
    (Mbm(n_mirrors=8, mod_order=8), GRID44, 176),
    (Cim(n_codes=2, code_length=2, mod_order=4), GRID22, 16),
    (Cim(n_codes=4, code_length=4, mod_order=4), GRID44, 96),
    (Cim(n_codes=8, code_length=8, mod_order=8), GRID44, 144),
]


class TestBitsPerFrame:
    @pytest.mark.parametrize("spec,grid,expected", SE_TABLE)
    def test_se_cases(self, spec, grid, expected):
        assert bits_per_frame(spec, grid) == expected

    def test_frame_is_grid_count_times_per_grid(self):
        spec = Qsm(n_antennas=4, mod_order=16)
        assert bits_per_frame(spec, GRID44) == 16 * bits_per_grid(spec)

    def test_branch_counts(self):
        assert branch_count(Otfs(4)) == 1
        assert branch_count(Ssk(n_antennas=8)) == 8
        assert branch_count(Mbm(n_mirrors=3, mod_order=4)) == 8
        assert branch_count(Cim(n_codes=2, code_length=4, mod_order=4)) == 1

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            Sm(n_antennas=3, mod_order=4)
        with pytest.raises(ValueError):
            Otfs(mod_order=6)
        with pytest.raises(ValueError):
            Cim(n_codes=8, code_length=4, mod_order=4)
        with pytest.raises(ValueError):
            Mbm(n_mirrors=0, mod_order=4)


class TestAntennaIndexMappingTable:
    """The worked BPSK/2-antenna example frame, grid by grid."""

    BITS = np.array([0, 0, 1, 0, 1, 1, 0, 1])

    def test_columns(self):
        tx = map_frame(Sm(n_antennas=2, mod_order=2), self.BITS, GRID22)
        expected = np.array([[-1, 1, 0, 0], [0, 0, 1, -1]], dtype=complex)
        assert np.array_equal(tx.tx_matrix, expected)

    def test_records(self):
        tx = map_frame(Sm(n_antennas=2, mod_order=2), self.BITS, GRID22)
        # (symbol label, antenna index): -1 on antenna 0, +1 on antenna 0,
        # +1 on antenna 1, -1 on antenna 1
        assert np.array_equal(tx.records, [[0, 0], [1, 0], [1, 1], [0, 1]])

    def test_demap_third_grid(self):
        # +1 on the second antenna demaps to bits [1, 1]
        spec = Sm(n_antennas=2, mod_order=2)
        assert np.array_equal(demap_frame(spec, np.array([[1, 1]])), [1, 1])

    def test_demap_inverts_the_frame(self):
        spec = Sm(n_antennas=2, mod_order=2)
        tx = map_frame(spec, self.BITS, GRID22)
        assert np.array_equal(demap_frame(spec, tx.records), self.BITS)


class TestQuadratureMapping:
    def test_single_grid_example(self):
        # symbol bits 00 -> (1+j)/sqrt(2); real index bit 0 -> antenna 0;
        # imag index bit 1 -> antenna 1
        grid = DdGridConfig(1, 1)
        tx = map_frame(Qsm(n_antennas=2, mod_order=4), np.array([0, 0, 0, 1]), grid)
        expected = np.array([[1 / np.sqrt(2)], [1j / np.sqrt(2)]])
        assert tx.tx_matrix == pytest.approx(expected)

    def test_coincident_indices_carry_full_symbol(self):
        grid = DdGridConfig(1, 1)
        tx = map_frame(Qsm(n_antennas=2, mod_order=4), np.array([0, 1, 1, 1]), grid)
        const_point = map_frame(Otfs(4), np.array([0, 1]), grid).tx_matrix[0, 0]
        assert tx.tx_matrix[0, 0] == 0
        assert tx.tx_matrix[1, 0] == pytest.approx(const_point)

    def test_column_nonzero_structure(self):
        spec = Qsm(n_antennas=4, mod_order=16)
        gen = Rng(0).generator()
        for k in range(50):
            bits = gen.integers(0, 2, size=bits_per_frame(spec, GRID22))
            tx = map_frame(spec, bits, GRID22)
            nonzeros = np.count_nonzero(np.abs(tx.tx_matrix) > 1e-15, axis=0)
            assert np.all(nonzeros <= 2)


class TestColumnStructure:
    @pytest.mark.parametrize("spec", [
        Sm(n_antennas=4, mod_order=4),
        Ssk(n_antennas=4),
        Mbm(n_mirrors=2, mod_order=4),
    ])
    def test_exactly_one_nonzero_per_column(self, spec):
        gen = Rng(1).generator()
        for _ in range(50):
            bits = gen.integers(0, 2, size=bits_per_frame(spec, GRID22))
            tx = map_frame(spec, bits, GRID22)
            assert np.all(np.count_nonzero(tx.tx_matrix, axis=0) == 1)

    def test_ssk_transmits_literal_one(self):
        tx = map_frame(Ssk(n_antennas=2), np.array([0, 1, 1, 0]), GRID22)
        assert np.array_equal(np.abs(tx.tx_matrix).sum(axis=0), np.ones(4))
        assert np.array_equal(tx.records.reshape(-1), [0, 1, 1, 0])

    def test_mbm_nonzero_in_active_pattern_row(self):
        spec = Mbm(n_mirrors=2, mod_order=2)
        bits = np.array([1, 1, 0,  0, 0, 1,  1, 1, 1,  0, 1, 0])
        tx = map_frame(spec, bits, GRID22)
        assert tx.tx_matrix.shape == (4, 4)
        for i in range(4):
            assert np.count_nonzero(tx.tx_matrix[:, i]) == 1
            assert tx.tx_matrix[tx.records[i, 1], i] != 0


class TestEnergy:
    @pytest.mark.parametrize("spec", [
        Otfs(4), Sm(n_antennas=2, mod_order=4), Ssk(n_antennas=4),
        Mbm(n_mirrors=2, mod_order=2),
    ])
    def test_unit_modulus_schemes_exact(self, spec):
        gen = Rng(2).generator()
        bits = gen.integers(0, 2, size=bits_per_frame(spec, GRID22))
        tx = map_frame(spec, bits, GRID22)
        energies = np.sum(np.abs(tx.tx_matrix) ** 2, axis=0)
        assert energies == pytest.approx(np.ones(4), abs=1e-12)

    @pytest.mark.parametrize("make", [
        lambda: Otfs(16),
        lambda: Qsm(n_antennas=2, mod_order=16),
    ])
    def test_qam_schemes_unit_on_average(self, make):
        spec = make()
        gen = Rng(3).generator()
        acc = []
        for _ in range(2000):
            bits = gen.integers(0, 2, size=bits_per_frame(spec, GRID22))
            tx = map_frame(spec, bits, GRID22)
            acc.append(np.mean(np.sum(np.abs(tx.tx_matrix) ** 2, axis=0)))
        assert np.mean(acc) == pytest.approx(1.0, abs=0.02)

    def test_cim_chip_energy_unit_on_average(self):
        spec = Cim(n_codes=2, code_length=4, mod_order=16)
        book = walsh_codes(4, 2)
        gen = Rng(4).generator()
        acc = []
        for _ in range(2000):
            bits = gen.integers(0, 2, size=bits_per_frame(spec, GRID22))
            tx = map_frame(spec, bits, GRID22, codebook=book)
            per_grid = np.sum(tx.chips_i ** 2, axis=1) + np.sum(tx.chips_q ** 2, axis=1)
            acc.append(np.mean(per_grid))
        assert np.mean(acc) == pytest.approx(1.0, abs=0.02)


ALL_SCHEMES = [
    Otfs(4),
    Ssk(n_antennas=4),
    Sm(n_antennas=2, mod_order=4),
    Qsm(n_antennas=2, mod_order=4),
    Mbm(n_mirrors=2, mod_order=4),
    Cim(n_codes=2, code_length=4, mod_order=4),
]

PARAM_GRID = (
    [Otfs(m) for m in (2, 4, 16)]
    + [Ssk(n_antennas=n) for n in (2, 4)]
    + [Sm(n_antennas=n, mod_order=m) for n in (2, 4) for m in (2, 4, 16)]
    + [Qsm(n_antennas=n, mod_order=m) for n in (2, 4) for m in (2, 4, 16)]
    + [Mbm(n_mirrors=n, mod_order=m) for n in (2, 4) for m in (2, 4, 16)]
    + [Cim(n_codes=n, code_length=2 * n, mod_order=m) for n in (2, 4) for m in (2, 4, 16)]
)


class TestRoundTrip:
    @pytest.mark.parametrize("spec", ALL_SCHEMES, ids=scheme_label)
    def test_ten_thousand_random_frames(self, spec):
        book = (
            walsh_codes(spec.code_length, spec.n_codes)
            if isinstance(spec, Cim) else None
        )
        n = bits_per_frame(spec, GRID22)
        gen = Rng(5).generator()
        all_bits = gen.integers(0, 2, size=(10_000, n))
        for bits in all_bits:
            tx = map_frame(spec, bits, GRID22, codebook=book)
            assert np.array_equal(demap_frame(spec, tx.records), bits)

    @pytest.mark.parametrize("spec", PARAM_GRID, ids=str)
    def test_parameter_grid(self, spec):
        book = (
            walsh_codes(spec.code_length, spec.n_codes)
            if isinstance(spec, Cim) else None
        )
        n = bits_per_frame(spec, GRID22)
        gen = Rng(6).generator()
        for _ in range(50):
            bits = gen.integers(0, 2, size=n)
            tx = map_frame(spec, bits, GRID22, codebook=book)
            assert np.array_equal(demap_frame(spec, tx.records), bits)


class TestCimMapping:
    def test_demap_code_indices(self):
        # 4-QAM symbol q=2, in-phase code index 1, quadrature code index 0
        spec = Cim(n_codes=2, code_length=4, mod_order=4)
        bits = demap_frame(spec, np.array([[2, 1, 0]]))
        assert np.array_equal(bits, [1, 0, 1, 0])

    def test_chips_are_scaled_codes(self):
        spec = Cim(n_codes=2, code_length=4, mod_order=4)
        book = walsh_codes(4, 2)
        bits = np.array([0, 0, 1, 0] * 4)
        tx = map_frame(spec, bits, GRID22, codebook=book)
        sym = tx.tx_matrix[0]
        for v in range(4):
            assert tx.chips_i[v] == pytest.approx(sym[v].real * book.codes[1])
            assert tx.chips_q[v] == pytest.approx(sym[v].imag * book.codes[0])

    def test_codebook_required_and_checked(self):
        spec = Cim(n_codes=2, code_length=4, mod_order=4)
        bits = np.zeros(16, dtype=int)
        with pytest.raises(CodebookMismatch):
            map_frame(spec, bits, GRID22)
        with pytest.raises(CodebookMismatch):
            map_frame(spec, bits, GRID22, codebook=walsh_codes(8, 2))


class TestWalshCodes:
    def test_order_two(self):
        book = walsh_codes(2, 2)
        assert book.codes == pytest.approx(
            np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        )

    def test_orthonormal_order_four(self):
        book = walsh_codes(4, 4)
        gram = book.codes @ book.codes.T
        assert gram == pytest.approx(np.eye(4), abs=1e-12)

    def test_subset_normalized(self):
        book = walsh_codes(8, 4)
        assert book.n_codes == 4 and book.code_length == 8
        assert np.sum(book.codes ** 2, axis=1) == pytest.approx(np.ones(4))

    def test_invalid_sizes(self):
        with pytest.raises(InvalidSize):
            walsh_codes(6, 2)
        with pytest.raises(InvalidSize):
            walsh_codes(4, 5)
        with pytest.raises(InvalidSize):
            walsh_codes(4, 0)


class TestErrors:
    def test_wrong_bit_count(self):
        with pytest.raises(WrongBitCount):
            map_frame(Otfs(4), np.zeros(7, dtype=int), GRID22)

    def test_index_out_of_range(self):
        spec = Sm(n_antennas=2, mod_order=2)
        with pytest.raises(IndexOutOfRange):
            demap_frame(spec, np.array([[1, 2]]))
        with pytest.raises(IndexOutOfRange):
            demap_frame(spec, np.array([[1, -1]]))
        with pytest.raises(IndexOutOfRange):
            demap_frame(spec, np.array([[1, 0, 0]]))

    def test_record_fields_exposed(self):
        assert record_fields(Qsm(n_antennas=2, mod_order=4)) == (
            "symbol", "branch_re", "branch_im",
        )
