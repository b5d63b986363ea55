import numpy as np
import pytest

from mcfifo.errors import InvalidSpecError, NoDecayError, UnsupportedEnvelopeError
from mcfifo.traffic import (
    ClassSpec,
    Constant,
    CoupledPoisson,
    DegenerateTail,
    ExponentialMean,
    ExponentialTail,
    Periodic,
    Poisson,
    deterministic_envelope,
    gen_coupled_poisson,
    gen_periodic,
    gen_poisson,
    gsbb_tail_from_mgf,
)

CASE1_CLASS1 = ClassSpec(1, Periodic(1e-4), Constant(800.0), 20e6)
CASE1_CLASS2 = ClassSpec(2, Periodic(1e-3), Constant(10000.0), 100e6)


class TestGenPeriodic:
    def test_case1_first_three_arrivals(self):
        seq = gen_periodic(CASE1_CLASS1, 3)
        np.testing.assert_allclose(seq.times_s, [1e-4, 2e-4, 3e-4], rtol=1e-12)
        assert np.all(seq.sizes_bits == 800.0)

    def test_single_arrival(self):
        spec = ClassSpec(1, Periodic(1.0), Constant(1.0), 1.0)
        seq = gen_periodic(spec, 1)
        assert seq.times_s[0] == 1.0

    def test_thousandth_arrival_lands_on_one_second(self):
        seq = gen_periodic(CASE1_CLASS2, 1000)
        assert seq.times_s[-1] == pytest.approx(1.0, rel=1e-12)

    def test_wrong_arrival_kind_rejected(self):
        spec = ClassSpec(1, Poisson(10.0), Constant(1.0), 1.0)
        with pytest.raises(InvalidSpecError):
            gen_periodic(spec, 5)


class TestGenPoisson:
    def test_mean_interarrival(self):
        spec = ClassSpec(1, Poisson(10000.0), Constant(800.0), 10e6)
        seq = gen_poisson(spec, 1_000_000, seed=42)
        gaps = np.diff(np.concatenate([[0.0], seq.times_s]))
        assert gaps.mean() == pytest.approx(1e-4, rel=0.01)

    def test_deterministic_for_fixed_seed(self):
        spec = ClassSpec(1, Poisson(1.0), Constant(1.0), 1.0)
        a = gen_poisson(spec, 1000, seed=7)
        b = gen_poisson(spec, 1000, seed=7)
        np.testing.assert_array_equal(a.times_s, b.times_s)
        np.testing.assert_array_equal(a.sizes_bits, b.sizes_bits)

    def test_exponential_size_mean(self):
        spec = ClassSpec(1, Poisson(1000.0), ExponentialMean(10000.0), 100e6)
        seq = gen_poisson(spec, 1_000_000, seed=3)
        assert seq.sizes_bits.mean() == pytest.approx(10000.0, rel=0.01)

    def test_count_must_be_positive(self):
        spec = ClassSpec(1, Poisson(1.0), Constant(1.0), 1.0)
        with pytest.raises(InvalidSpecError):
            gen_poisson(spec, 0, seed=1)


def _coupled_pair(rate1, rate2, mechanism="scaled"):
    return [
        ClassSpec(1, CoupledPoisson(rate1, 9, mechanism), Constant(800.0), 10e6),
        ClassSpec(2, CoupledPoisson(rate2, 9, mechanism), Constant(10000.0), 100e6),
    ]


class TestGenCoupledPoisson:
    def test_equal_rates_give_identical_sequences(self):
        seqs = gen_coupled_poisson(_coupled_pair(500.0, 500.0), 2000, seed=5)
        np.testing.assert_array_equal(seqs[0].times_s, seqs[1].times_s)

    def test_scaling_identity_elementwise(self):
        # identical uniforms scaled per class: the whole class-2 timeline is
        # the class-1 timeline stretched by the rate ratio
        seqs = gen_coupled_poisson(_coupled_pair(10000.0, 1000.0), 5000, seed=5)
        np.testing.assert_allclose(seqs[1].times_s, 10.0 * seqs[0].times_s, rtol=1e-12)
        gaps1 = np.diff(np.concatenate([[0.0], seqs[0].times_s]))
        gaps2 = np.diff(np.concatenate([[0.0], seqs[1].times_s]))
        np.testing.assert_allclose(gaps2, 10.0 * gaps1, rtol=1e-8)

    def test_marginal_moments_match_independent_poisson(self):
        # coupling must leave each marginal an exponential interarrival stream
        n = 1_000_000
        seqs = gen_coupled_poisson(_coupled_pair(10000.0, 1000.0), n, seed=11)
        for seq, rate in zip(seqs, (10000.0, 1000.0)):
            gaps = np.diff(np.concatenate([[0.0], seq.times_s]))
            mean_se = (1 / rate) / np.sqrt(n)
            assert abs(gaps.mean() - 1 / rate) < 3 * mean_se
            var_se = np.sqrt(23.0) / rate**2 / np.sqrt(n)  # Var[s^2] for exp
            assert abs(gaps.var(ddof=1) - 1 / rate**2) < 3 * var_se

    def test_synchronized_is_a_subset_of_the_fast_class(self):
        seqs = gen_coupled_poisson(
            _coupled_pair(10000.0, 1000.0, "synchronized"), 50_000, seed=13
        )
        fast, slow = seqs
        assert len(slow) < len(fast)
        assert np.all(np.isin(slow.times_s, fast.times_s))
        gaps = np.diff(np.concatenate([[0.0], slow.times_s]))
        assert gaps.mean() == pytest.approx(1e-3, rel=0.05)

    def test_rejects_single_class_group(self):
        spec = ClassSpec(1, CoupledPoisson(1.0, 9), Constant(1.0), 1.0)
        with pytest.raises(InvalidSpecError):
            gen_coupled_poisson([spec], 10, seed=1)

    def test_sizes_are_not_coupled(self):
        specs = [
            ClassSpec(1, CoupledPoisson(100.0, 9), ExponentialMean(100.0), 1e6),
            ClassSpec(2, CoupledPoisson(100.0, 9), ExponentialMean(100.0), 1e6),
        ]
        seqs = gen_coupled_poisson(specs, 5000, seed=1)
        corr = np.corrcoef(seqs[0].sizes_bits, seqs[1].sizes_bits)[0, 1]
        assert abs(corr) < 0.05


class TestDeterministicEnvelope:
    def test_case1_class1(self):
        env = deterministic_envelope(CASE1_CLASS1)
        assert env.rate_bps == pytest.approx(8e6, rel=1e-12)
        assert env.burst_bits == 800.0

    def test_case1_class2(self):
        env = deterministic_envelope(CASE1_CLASS2)
        assert env.rate_bps == pytest.approx(10e6, rel=1e-12)
        assert env.burst_bits == 10000.0

    def test_one_bit_per_second(self):
        env = deterministic_envelope(ClassSpec(1, Periodic(1.0), Constant(1.0), 2.0))
        assert env.rate_bps == 1.0 and env.burst_bits == 1.0

    def test_stochastic_class_rejected(self):
        with pytest.raises(UnsupportedEnvelopeError):
            deterministic_envelope(ClassSpec(1, Poisson(1.0), Constant(1.0), 1.0))


class TestPeriodicEnvelopeInvariant:
    def test_window_scan(self):
        # every window of the generated sequence obeys rate*t + burst
        seq = gen_periodic(CASE1_CLASS1, 2000)
        env = deterministic_envelope(CASE1_CLASS1)
        times = seq.times_s
        counts = np.arange(1, len(times) + 1)
        # windows [a_i, a_j + eps): traffic (j - i + 1) packets
        i, j = np.triu_indices(len(times))
        traffic = (counts[j] - counts[i] + 1) * 800.0
        allowed = env.rate_bps * (times[j] - times[i]) + env.burst_bits
        assert np.all(traffic <= allowed * (1 + 1e-9))


class TestGsbbTail:
    def test_periodic_class_degenerate(self):
        tail = gsbb_tail_from_mgf(CASE1_CLASS1, reference_rate_bps=8e6)
        assert isinstance(tail, DegenerateTail)
        assert tail.tail(799.0) == 1.0
        assert tail.tail(800.0) == 0.0
        assert tail.tail(801.0) == 0.0

    def test_boundary_rate_share_rejected(self):
        # reference share exactly equal to the class utilization: no decay
        spec = ClassSpec(1, Poisson(1e4), Constant(800.0), 10e6)
        with pytest.raises(NoDecayError):
            gsbb_tail_from_mgf(spec, reference_rate_bps=0.8 * 10e6)

    def test_constant_size_approximation_value(self):
        # share 0.832 against utilization 0.8 gives 2*0.032/(1e4*(8e-5)^2) = 1000/s
        spec = ClassSpec(1, Poisson(1e4), Constant(800.0), 10e6)
        tail = gsbb_tail_from_mgf(spec, reference_rate_bps=0.832 * 10e6, method="approx")
        assert isinstance(tail, ExponentialTail)
        assert tail.decay_per_bit * 10e6 == pytest.approx(1000.0, rel=1e-9)

    def test_constant_size_exact_solves_condition(self):
        import math

        spec = ClassSpec(1, Poisson(1e4), Constant(800.0), 10e6)
        omega = 0.832
        tail = gsbb_tail_from_mgf(spec, reference_rate_bps=omega * 10e6, method="exact")
        theta = tail.decay_per_bit * 10e6
        residual = 1e4 * math.expm1(theta * 8e-5) - theta * omega
        assert abs(residual) <= 1e-6 * theta

    def test_exponential_size_closed_form(self):
        spec = ClassSpec(2, Poisson(1000.0), ExponentialMean(10000.0), 100e6)
        omega = 0.2
        tail = gsbb_tail_from_mgf(spec, reference_rate_bps=omega * 100e6)
        mu = 100e6 / 10000.0
        expected = mu - 1000.0 / omega
        assert tail.decay_per_bit * 100e6 == pytest.approx(expected, rel=1e-12)

    def test_decay_positive_iff_share_above_utilization(self):
        spec = ClassSpec(1, Poisson(1e4), Constant(800.0), 10e6)
        tail = gsbb_tail_from_mgf(spec, reference_rate_bps=0.801 * 10e6, method="approx")
        assert tail.decay_per_bit > 0
        with pytest.raises(NoDecayError):
            gsbb_tail_from_mgf(spec, reference_rate_bps=0.799 * 10e6)


class TestSequenceCsv:
    def test_schema_and_roundtrip(self, tmp_path):
        seq = gen_periodic(CASE1_CLASS1, 5)
        path = tmp_path / "seq.csv"
        seq.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "class_id,arrival_time_s,size_bits"
        assert len(lines) == 6
        cid, t, bits = lines[1].split(",")
        assert int(cid) == 1
        assert float(t) == seq.times_s[0] and float(bits) == 800.0


class TestSpecValidation:
    @pytest.mark.parametrize(
        "arrival,size,rate",
        [
            (Periodic(0.0), Constant(1.0), 1.0),
            (Poisson(-1.0), Constant(1.0), 1.0),
            (Poisson(1.0), Constant(0.0), 1.0),
            (Poisson(1.0), ExponentialMean(-5.0), 1.0),
            (Poisson(1.0), Constant(1.0), 0.0),
        ],
    )
    def test_invalid_parameters_rejected(self, arrival, size, rate):
        with pytest.raises(InvalidSpecError):
            ClassSpec(1, arrival, size, rate)

    def test_derived_quantities(self):
        spec = ClassSpec(1, Poisson(1e4), Constant(800.0), 10e6)
        assert spec.mean_service_s == pytest.approx(8e-5)
        assert spec.service_completion_rate_hz == pytest.approx(12500.0)
        assert spec.utilization == pytest.approx(0.8)
        assert spec.mean_rate_bps == pytest.approx(8e6)
