import pytest

from kme_decon.equivalence import CHECKS, run_suite

# checks whose routes pass through DME dual weights
PERTURBED = {"dme_standard_vs_woodbury", "ttgp_mean_vs_dme", "kernel_trick_w_equals_phi_alpha"}


class TestSuite:
    def test_all_pass(self):
        results = run_suite()
        assert [r.name for r in results] == [c[0] for c in CHECKS]
        failed = [(r.name, r.max_deviation) for r in results if not r.passed]
        assert not failed

    def test_perturbation_detected(self):
        results = {r.name: r for r in run_suite(seeds=(0, 1, 2), perturb=1e-3)}
        for name, result in results.items():
            assert result.passed == (name not in PERTURBED), name

    def test_tolerances_reported(self):
        result = run_suite(seeds=(0,), names={"woodbury_identity"})[0]
        d = result.to_dict()
        assert d["tolerance"] == 1e-9 and d["kind"] == "relative" and d["seeds"] == [0]

    @pytest.mark.parametrize("name", [c[0] for c in CHECKS])
    def test_each_check_on_fresh_seeds(self, name):
        result = run_suite(seeds=(50, 51), names={name})[0]
        assert result.passed, result
