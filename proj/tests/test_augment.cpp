#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <freqcenter/augment.hpp>

namespace fq = freqcenter;

namespace {

fq::ActivationTensor random_tensor(std::uint64_t seed, std::size_t D, std::size_t F, std::size_t T) {
    fq::Rng rng(seed);
    fq::ActivationTensor x(D, F, T);
    for (double& v : x.values()) v = fq::gaussian(rng, 3.0, 2.0);
    return x;
}

}  // namespace

TEST(Beta, MomentsAtSmallAlpha) {
    fq::Rng rng(1);
    const int n = 200000;
    double s = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = fq::sample_beta(0.3, rng);
        ASSERT_GT(x, 0.0);
        ASSERT_LT(x, 1.0);
        s += x;
        sq += x * x;
    }
    const double mean = s / n;
    // Beta(a, a) has variance 1 / (4 (2a + 1)).
    EXPECT_NEAR(mean, 0.5, 0.01);
    EXPECT_NEAR(sq / n - mean * mean, 1.0 / (4.0 * 1.6), 0.01);
}

TEST(Beta, MomentsAtLargeAlpha) {
    fq::Rng rng(2);
    const int n = 100000;
    double s = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = fq::sample_beta(2.0, rng);
        s += x;
        sq += x * x;
    }
    const double mean = s / n;
    EXPECT_NEAR(mean, 0.5, 0.01);
    EXPECT_NEAR(sq / n - mean * mean, 1.0 / 20.0, 0.005);
    EXPECT_THROW(fq::sample_beta(0.0, rng), fq::UsageError);
}

TEST(Gain, ZeroDoubleAndComposition) {
    fq::Waveform w{{0.1, -0.2, 0.05, 0.0}, 16000};
    EXPECT_EQ(fq::gain(w, 0.0).samples, w.samples);
    const auto d = fq::gain(w, 20.0 * std::log10(2.0));
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(d.samples[i], 2.0 * w.samples[i], 1e-12);
    const auto ab = fq::gain(fq::gain(w, 3.0), -5.0);
    const auto c = fq::gain(w, -2.0);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(ab.samples[i], c.samples[i], 1e-12);
}

TEST(Gain, ClampsToUnitRange) {
    const auto g = fq::gain(fq::Waveform{{0.5, -0.9}, 16000}, 20.0);
    EXPECT_EQ(g.samples, (std::vector<double>{1.0, -1.0}));
}

TEST(Mixup, EndpointsAndOpposites) {
    const auto a = random_tensor(3, 1, 4, 5), b = random_tensor(4, 1, 4, 5);
    EXPECT_EQ(fq::mixup(a, b, 1.0), a);
    EXPECT_EQ(fq::mixup(a, b, 0.0), b);
    fq::ActivationTensor neg = a;
    for (double& v : neg.values()) v = -v;
    const auto m = fq::mixup(a, neg, 0.8);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(m.values()[i], 0.6 * a.values()[i], 1e-12);
}

TEST(Mixup, EnvelopeAndAffinity) {
    const auto a = random_tensor(5, 2, 3, 7), b = random_tensor(6, 2, 3, 7);
    fq::Rng rng(5);
    for (int k = 0; k < 20; ++k) {
        const double lam = fq::uniform01(rng);
        const auto m = fq::mixup(a, b, lam);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double lo = std::min(a.values()[i], b.values()[i]), hi = std::max(a.values()[i], b.values()[i]);
            EXPECT_GE(m.values()[i], lo - 1e-12);
            EXPECT_LE(m.values()[i], hi + 1e-12);
        }
        fq::ActivationTensor as = a, bs = b;
        for (double& v : as.values()) v = 2.5 * v - 4.0;
        for (double& v : bs.values()) v = 2.5 * v - 4.0;
        const auto ms = fq::mixup(as, bs, lam);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(ms.values()[i], 2.5 * m.values()[i] - 4.0, 1e-12);
    }
}

TEST(Mixup, LabelsAndErrors) {
    EXPECT_EQ(fq::mixup(std::vector<double>{1, 0, 0}, std::vector<double>{0, 0, 1}, 0.25),
              (std::vector<double>{0.25, 0, 0.75}));
    EXPECT_THROW(fq::mixup(std::vector<double>{1}, std::vector<double>{1, 2}, 0.5), fq::UsageError);
    EXPECT_THROW(fq::mixup(std::vector<double>{1}, std::vector<double>{1}, 1.5), fq::UsageError);
    EXPECT_THROW(fq::mixup(fq::Waveform{{0.0}, 16000}, fq::Waveform{{0.0}, 8000}, 0.5), fq::UsageError);
}

TEST(SpecAugment, ZeroWidthsAreIdentity) {
    const auto x = random_tensor(7, 1, 80, 97);
    fq::AugmentConfig cfg;
    cfg.max_freq_width = 0;
    cfg.max_time_width = 0;
    fq::Rng rng(7);
    EXPECT_EQ(fq::spec_augment(x, cfg, rng), x);
}

TEST(SpecAugment, MasksStayInBoundsAndOnlyFill) {
    const auto x = random_tensor(8, 1, 80, 97);
    const double fill = fq::mean_std(x.values()).mean;
    fq::AugmentConfig cfg;
    cfg.max_time_width = 97;
    fq::Rng rng(8);
    for (int k = 0; k < 50; ++k) {
        fq::SpecAugmentMask mask;
        const auto y = fq::spec_augment(x, cfg, rng, &mask);
        ASSERT_TRUE(y.same_shape(x));
        EXPECT_LE(mask.freq_width, cfg.max_freq_width);
        EXPECT_LE(mask.time_width, cfg.max_time_width);
        EXPECT_LE(mask.freq_start + mask.freq_width, 80u);
        EXPECT_LE(mask.time_start + mask.time_width, 97u);
        std::size_t changed = 0;
        for (std::size_t f = 0; f < 80; ++f)
            for (std::size_t t = 0; t < 97; ++t) {
                if (y(0, f, t) == x(0, f, t)) continue;
                ++changed;
                EXPECT_DOUBLE_EQ(y(0, f, t), fill);
                const bool in_f = f >= mask.freq_start && f < mask.freq_start + mask.freq_width;
                const bool in_t = t >= mask.time_start && t < mask.time_start + mask.time_width;
                EXPECT_TRUE(in_f || in_t);
            }
        EXPECT_LE(changed, mask.freq_width * 97 + mask.time_width * 80);
    }
}

TEST(SpecAugment, DeterministicPerSeed) {
    const auto x = random_tensor(9, 1, 80, 97);
    fq::AugmentConfig cfg;
    cfg.max_time_width = 50;
    fq::Rng a(11), b(11);
    EXPECT_EQ(fq::spec_augment(x, cfg, a), fq::spec_augment(x, cfg, b));
}

TEST(SpecAugment, WidthTooLarge) {
    fq::AugmentConfig cfg;  // default time width 192 > 97
    fq::Rng rng(1);
    EXPECT_THROW(fq::spec_augment(random_tensor(1, 1, 80, 97), cfg, rng), fq::UsageError);
}

TEST(AugmentConfig, Validation) {
    fq::AugmentConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.mixup_spec.p = 1.5;
    EXPECT_THROW(cfg.validate(), fq::UsageError);
    cfg = {};
    cfg.mixup_wave.alpha = 0.0;
    EXPECT_THROW(cfg.validate(), fq::UsageError);
    cfg = {};
    cfg.gain_db_range = -1.0;
    EXPECT_THROW(cfg.validate(), fq::UsageError);
}
