#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "pra/channel.hpp"
#include "pra/prediction.hpp"
#include "pra/rng.hpp"
#include "pra/stats.hpp"

using namespace pra;

namespace {
const RadioParams radio{8, 10e6, 40.0, 3.9810717055349695e-21};
}

TEST_CASE("path loss gain follows the log-distance model") {
    CHECK(path_loss_gain(1.0) == Catch::Approx(std::pow(10.0, -3.68)).epsilon(1e-12));
    // each decade of distance costs 36.7 dB
    CHECK(path_loss_gain(10.0) / path_loss_gain(1.0) ==
          Catch::Approx(std::pow(10.0, -3.67)).epsilon(1e-12));
    CHECK_THROWS_AS(path_loss_gain(0.0), std::domain_error);
    CHECK_THROWS_AS(path_loss_gain(-5.0), std::domain_error);
}

TEST_CASE("edge SNR calibration") {
    const double c = calibrate_snr(250.0, 5.0, radio);
    CHECK(c * path_loss_gain(250.0) * radio.snr_per_gain() ==
          Catch::Approx(std::pow(10.0, 0.5)).epsilon(1e-12));

    const double c0 = calibrate_snr(250.0, 0.0, radio);
    CHECK(c0 * path_loss_gain(250.0) * radio.snr_per_gain() == Catch::Approx(1.0).epsilon(1e-12));

    RadioParams twice = radio;
    twice.max_power_w *= 2.0;
    CHECK(calibrate_snr(250.0, 5.0, twice) == Catch::Approx(0.5 * c).epsilon(1e-12));
}

TEST_CASE("small-scale gain moments match Gamma(N_t, 1)") {
    const int n = 1000000;
    rng::Sequence seq(101, 0);
    stats::RunningMoments one;
    for (int i = 0; i < n; ++i) one.add(draw_small_scale(1, seq));
    CHECK(one.mean() == Catch::Approx(1.0).margin(0.01));

    rng::Sequence seq8(101, 1);
    stats::RunningMoments eight;
    for (int i = 0; i < n; ++i) eight.add(draw_small_scale(8, seq8));
    CHECK(eight.mean() == Catch::Approx(8.0).margin(0.03));
    CHECK(eight.variance() == Catch::Approx(8.0).margin(0.1));

    CHECK_THROWS_AS(draw_small_scale(0, seq), std::domain_error);
}

TEST_CASE("small-scale density matches the chi-square-like form") {
    // f(x) = x^{Nt-1} e^{-x} / Gamma(Nt)
    const int n = 1000000, bins = 50;
    const double hi = 24.0, w = hi / bins;
    std::vector<double> hist(bins, 0.0);
    rng::Sequence seq(77, 0);
    for (int i = 0; i < n; ++i) {
        const double x = draw_small_scale(8, seq);
        const int b = static_cast<int>(x / w);
        if (b >= 0 && b < bins) hist[b] += 1.0;
    }
    for (double& h : hist) h /= n * w;
    const double lgamma8 = std::lgamma(8.0);
    for (int b = 0; b < bins; ++b) {
        const double x = (b + 0.5) * w;
        const double f = std::exp(7.0 * std::log(x) - x - lgamma8);
        CHECK(std::abs(hist[b] - f) < 0.005);
    }
}

TEST_CASE("instantaneous rate") {
    SECTION("zero bandwidth is a valid idle slot") {
        const SlotState s = make_slot(0.0, 5.0, radio);
        CHECK(instantaneous_rate(s, {1.0}, radio) == 0.0);
    }
    SECTION("unit SNR gives one bit per second per Hz") {
        // choose gain so alpha*h2*P/sigma^2 = 1 with proportional power
        const double gain = 1.0 / radio.snr_per_gain();
        const SlotState s = make_slot(1e6, 1.0, radio);
        CHECK(instantaneous_rate(s, {gain}, radio) == Catch::Approx(1e6).epsilon(1e-12));
    }
    SECTION("high-SNR value") {
        const double gain = std::pow(10.0, 3.5) / radio.snr_per_gain();
        const SlotState s = make_slot(10e6, 1.0, radio);
        CHECK(instantaneous_rate(s, {gain}, radio) ==
              Catch::Approx(10e6 * std::log2(1.0 + std::pow(10.0, 3.5))).epsilon(1e-12));
    }
    SECTION("proportional power reduces to the max-power SNR form") {
        const SlotState s = make_slot(3.7e6, 2.5, radio);
        const LargeScaleGain g{4.2e-9};
        const double expected =
            s.residual_bandwidth_hz *
            std::log2(1.0 + g.value * s.small_scale_gain * radio.snr_per_gain());
        CHECK(instantaneous_rate(s, g, radio) == Catch::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("frame average rate") {
    const double gain = 1.0 / radio.snr_per_gain();
    SECTION("identical slots average to the slot rate") {
        std::vector<SlotState> slots(100, make_slot(1e6, 1.0, radio));
        CHECK(frame_average_rate(slots, {gain}, radio) == Catch::Approx(1e6).epsilon(1e-12));
    }
    SECTION("one active slot among T_s") {
        std::vector<SlotState> slots(100, make_slot(0.0, 1.0, radio));
        slots[17] = make_slot(1e6, 1.0, radio);
        CHECK(frame_average_rate(slots, {gain}, radio) == Catch::Approx(1e4).epsilon(1e-12));
    }
    SECTION("empty frame is a domain error") {
        std::vector<SlotState> none;
        CHECK_THROWS_AS(frame_average_rate(none, {gain}, radio), std::domain_error);
    }
}

TEST_CASE("law of large numbers ties the frame average to the analytic mean") {
    // i.i.d. slots, T_s = 1e5: the average approaches Wbar * mu_hat(delta -> 0)
    const double alpha = std::pow(10.0, 2.5) / radio.snr_per_gain(); // 25 dB
    const double wbar = 1e6;
    rng::Sequence seq(303, 0);
    std::vector<SlotState> slots;
    ResidualBandwidthModel bwm{wbar, 0.2};
    for (int t = 0; t < 100000; ++t)
        slots.push_back(make_slot(bwm.draw(seq()), draw_small_scale(8, seq), radio));
    const double avg = frame_average_rate(slots, {alpha}, radio);
    const double analytic = wbar * mu_hat({alpha, 0.0, Dist::Uniform}, radio);
    CHECK(avg == Catch::Approx(analytic).epsilon(0.01));
}

TEST_CASE("frame-average variance scales as 1/T_s") {
    const double alpha = std::pow(10.0, 2.0) / radio.snr_per_gain();
    const int ts = 100, frames = 4000;
    rng::Sequence seq(404, 0);
    stats::RunningMoments per_slot, per_frame;
    for (int f = 0; f < frames; ++f) {
        double sum = 0.0;
        for (int t = 0; t < ts; ++t) {
            const SlotState s = make_slot(1e6, draw_small_scale(8, seq), radio);
            const double r = instantaneous_rate(s, {alpha}, radio);
            per_slot.add(r);
            sum += r;
        }
        per_frame.add(sum / ts);
    }
    CHECK(per_frame.variance() ==
          Catch::Approx(per_slot.variance() / ts).epsilon(0.10));
}

TEST_CASE("rate is monotone in gain, fading, bandwidth and power") {
    rng::Sequence seq(505, 0);
    for (int i = 0; i < 200; ++i) {
        const double w = 1e5 + seq() * 2e7;
        const double h2 = seq() * 20.0;
        const double a = 1e-12 + seq() * 1e-6;
        const SlotState s = make_slot(w, h2, radio);
        const double base = instantaneous_rate(s, {a}, radio);

        CHECK(instantaneous_rate(s, {a * 1.7}, radio) >= base);
        CHECK(instantaneous_rate(make_slot(w, h2 * 1.3, radio), {a}, radio) >= base);
        CHECK(instantaneous_rate(make_slot(w * 1.5, h2, radio), {a}, radio) >= base);
        RadioParams more = radio;
        more.max_power_w *= 2.0;
        CHECK(instantaneous_rate(make_slot(w, h2, more), {a}, more) >= base);
    }
}

TEST_CASE("residual bandwidth model") {
    ResidualBandwidthModel det{2e6, 0.0};
    CHECK(det.draw(0.3) == 2e6);
    ResidualBandwidthModel noisy{2e6, 0.2};
    rng::Sequence seq(606, 0);
    stats::RunningMoments m;
    for (int i = 0; i < 100000; ++i) {
        const double w = noisy.draw(seq());
        REQUIRE(w >= 0.0);
        m.add(w);
    }
    CHECK(m.mean() == Catch::Approx(2e6).epsilon(0.005));
}
