import math

import numpy as np
import pytest
import torch

from ccreid.errors import ValidationError
from ccreid.transfer import (
    TransferLossReport,
    adversarial_loss,
    domain_loss,
    reconstruction_loss,
)


class TestAdversarialLoss:
    def test_half_half_hand_value(self):
        # log 0.5 + log 0.5 = -1.386294
        got = adversarial_loss(torch.tensor([0.5]), torch.tensor([0.5]))
        assert abs(float(got) - (-1.386294)) < 1e-6

    def test_optimum_approaches_zero_from_below(self):
        vals = []
        for eps in (1e-2, 1e-4, 1e-6):
            v = float(adversarial_loss(torch.tensor([1 - eps]), torch.tensor([eps])))
            assert v < 0
            vals.append(v)
        assert vals[0] < vals[1] < vals[2]

    def test_batch_of_identical_samples_matches_single(self):
        one = adversarial_loss(torch.tensor([0.7]), torch.tensor([0.3]))
        two = adversarial_loss(torch.tensor([0.7, 0.7]), torch.tensor([0.3, 0.3]))
        assert abs(float(one) - float(two)) < 1e-7

    def test_out_of_range_scores_rejected(self):
        with pytest.raises(ValidationError):
            adversarial_loss(torch.tensor([1.0]), torch.tensor([0.5]))
        with pytest.raises(ValidationError):
            adversarial_loss(torch.tensor([0.5]), torch.tensor([0.0]))

    def test_clamp_is_opt_in(self):
        got = adversarial_loss(torch.tensor([1.0]), torch.tensor([0.0]), clamp_eps=1e-6)
        assert math.isfinite(float(got))


class TestDomainLoss:
    def test_certain_prediction_is_zero(self):
        probs = torch.tensor([[0.0, 1.0, 0.0, 0.0]])
        assert float(domain_loss(probs, 1)) == 0.0

    def test_uniform_over_four_cameras(self):
        probs = torch.full((1, 4), 0.25)
        assert abs(float(domain_loss(probs, 2)) - 1.386294) < 1e-6

    def test_point_one_target_probability(self):
        probs = torch.tensor([[0.1, 0.9]])
        assert abs(float(domain_loss(probs, 0)) - 2.302585) < 1e-6

    def test_one_hot_target_code_accepted(self):
        probs = torch.tensor([[0.1, 0.9]])
        code = torch.tensor([[1.0, 0.0]])
        assert abs(float(domain_loss(probs, code)) - 2.302585) < 1e-6

    def test_zero_probability_floored(self):
        probs = torch.tensor([[0.0, 1.0]])
        got = float(domain_loss(probs, 0))
        assert math.isfinite(got)
        assert abs(got - (-math.log(1e-12))) < 1e-6

    def test_unnormalized_rows_rejected(self):
        with pytest.raises(ValidationError):
            domain_loss(torch.tensor([[0.5, 0.2]]), 0)


class TestReconstructionLoss:
    def test_identical_images_give_exact_zero(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            x = torch.from_numpy(rng.uniform(size=(2, 3, 8, 8)))
            assert float(reconstruction_loss(x, x)) == 0.0

    def test_half_offset_hand_value(self):
        x = torch.zeros(1, 3, 4, 4)
        y = torch.full((1, 3, 4, 4), 0.5)
        assert abs(float(reconstruction_loss(x, y)) - 0.5) < 1e-7

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a = torch.from_numpy(rng.uniform(size=(1, 3, 6, 6)))
        b = torch.from_numpy(rng.uniform(size=(1, 3, 6, 6)))
        assert float(reconstruction_loss(a, b)) == float(reconstruction_loss(b, a))

    def test_nonnegative_on_random_pairs(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            a = torch.from_numpy(rng.normal(size=(1, 3, 5, 5)))
            b = torch.from_numpy(rng.normal(size=(1, 3, 5, 5)))
            assert float(reconstruction_loss(a, b)) >= 0.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            reconstruction_loss(torch.zeros(1, 3, 4, 4), torch.zeros(1, 3, 4, 5))


class TestLossReport:
    def test_totals_match_declared_sums(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            vals = rng.normal(size=3)
            rec = abs(rng.normal())
            lam_d, lam_r = rng.uniform(0.1, 5.0, size=2)
            report = TransferLossReport.from_components(
                l_adv=vals[0], l_dom_real=vals[1], l_dom_fake=vals[2],
                l_rec=rec, lambda_domain=lam_d, lambda_rec=lam_r,
            )
            report.validate()
            assert abs(report.total_d - (lam_d * vals[1] - vals[0])) < 1e-9
            assert abs(report.total_g - (vals[0] + lam_d * vals[2] + lam_r * rec)) < 1e-9

    def test_inconsistent_totals_rejected(self):
        report = TransferLossReport(
            l_adv=0.0, l_dom_real=1.0, l_dom_fake=1.0, l_rec=1.0,
            total_g=0.0, total_d=0.0, lambda_domain=1.0, lambda_rec=10.0,
        )
        with pytest.raises(ValidationError):
            report.validate()

    def test_negative_reconstruction_rejected(self):
        report = TransferLossReport.from_components(0.0, 0.0, 0.0, -0.1, 1.0, 10.0)
        with pytest.raises(ValidationError):
            report.validate()
