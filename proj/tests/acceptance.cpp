// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
// Criteria 1-3, 8 and 10 run in-process against independent oracles; 4-7 and
// 9 drive the CLI on the default config and read its CSV output.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <freqcenter/freqcenter.hpp>

namespace fq = freqcenter;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

int g_failures = 0;

void report(int n, const std::string& name, Outcome o, const std::string& summary) {
    if (!o.pass) ++g_failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << name << "): " << summary;
    if (!o.pass) std::cout << " | " << o.detail;
    std::cout << std::endl;
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

// ---------------------------------------------------------------------------
// CLI and CSV helpers

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FREQCENTER_CLI) + " " + args + " >/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error("csv: missing column " + name);
        return static_cast<std::size_t>(it - header.begin());
    }
    double num(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(col(name))); }
    const std::string& str(std::size_t row, const std::string& name) const { return rows.at(row).at(col(name)); }
};

Csv read_csv(const fs::path& p) {
    Csv c;
    std::istringstream in(read_file(p));
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        if (first)
            c.header = cells;
        else
            c.rows.push_back(cells);
        first = false;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Oracles

fq::ActivationTensor random_tensor(std::uint64_t seed) {
    fq::Rng rng(seed);
    const auto D = static_cast<std::size_t>(fq::uniform_int(rng, 1, 6));
    const auto F = static_cast<std::size_t>(fq::uniform_int(rng, 1, 12));
    const auto T = static_cast<std::size_t>(fq::uniform_int(rng, 2, 30));
    fq::ActivationTensor x(D, F, T);
    const double scale = fq::uniform(rng, 0.1, 20.0), shift = fq::uniform(rng, -50.0, 50.0);
    for (double& v : x.values()) v = shift + scale * fq::gaussian(rng);
    return x;
}

std::vector<double> oracle_freq_mean(const fq::ActivationTensor& x) {
    std::vector<double> mu(x.dims_f(), 0.0);
    for (std::size_t d = 0; d < x.dims_d(); ++d)
        for (std::size_t f = 0; f < x.dims_f(); ++f)
            for (std::size_t t = 0; t < x.dims_t(); ++t) mu[f] += x(d, f, t);
    for (double& m : mu) m /= double(x.dims_d() * x.dims_t());
    return mu;
}

fq::ActivationTensor oracle_ifn(const fq::ActivationTensor& x, double eps = 1e-5) {
    const auto mu = oracle_freq_mean(x);
    std::vector<double> sd(x.dims_f(), 0.0);
    for (std::size_t d = 0; d < x.dims_d(); ++d)
        for (std::size_t f = 0; f < x.dims_f(); ++f)
            for (std::size_t t = 0; t < x.dims_t(); ++t) sd[f] += std::pow(x(d, f, t) - mu[f], 2);
    for (double& s : sd) s = std::sqrt(s / double(x.dims_d() * x.dims_t()));
    fq::ActivationTensor y = x;
    for (std::size_t d = 0; d < x.dims_d(); ++d)
        for (std::size_t f = 0; f < x.dims_f(); ++f)
            for (std::size_t t = 0; t < x.dims_t(); ++t) y(d, f, t) = (x(d, f, t) - mu[f]) / (sd[f] + eps);
    return y;
}

fq::ActivationTensor oracle_layernorm(const fq::ActivationTensor& x, double eps = 1e-5) {
    double m = 0.0, v = 0.0;
    for (double a : x.values()) m += a;
    m /= double(x.size());
    for (double a : x.values()) v += (a - m) * (a - m);
    const double sd = std::sqrt(v / double(x.size()));
    fq::ActivationTensor y = x;
    for (double& a : y.values()) a = (a - m) / (sd + eps);
    return y;
}

double max_diff(const fq::ActivationTensor& a, const fq::ActivationTensor& b) {
    if (!a.same_shape(b)) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

// ---------------------------------------------------------------------------
// Criteria

void criterion_1() {
    const auto t0 = Clock::now();
    Outcome o;
    double worst = 0.0;
    auto check = [&](double err, const std::string& what, std::uint64_t seed) {
        worst = std::max(worst, err);
        o.require(err <= 1e-6, what + " seed " + std::to_string(seed) + " err " + sci(err));
    };
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto x = random_tensor(seed);
        const auto mu = oracle_freq_mean(x);
        const auto c = fq::fc(x);
        check(max_diff(fq::fc(c), c), "fc idempotence", seed);
        for (double lam : {0.0, 0.25, 0.5, 0.9, 1.0}) {
            fq::ActivationTensor expect = x;
            for (std::size_t d = 0; d < x.dims_d(); ++d)
                for (std::size_t f = 0; f < x.dims_f(); ++f)
                    for (double& v : expect.time_row(d, f)) v -= lam * mu[f];
            check(max_diff(fq::sfc(x, lam), expect), "sfc closed form", seed);
        }
        check(max_diff(fq::sfc(x, 0.0), x), "sfc lambda=0", seed);
        check(max_diff(fq::sfc(x, 1.0), c), "sfc lambda=1", seed);

        fq::Rng rng(fq::mix_seed(seed, 1));
        fq::ActivationTensor xo = x;
        for (std::size_t f = 0; f < x.dims_f(); ++f) {
            const double off = fq::uniform(rng, -15.0, 15.0);
            for (std::size_t d = 0; d < x.dims_d(); ++d)
                for (double& v : xo.time_row(d, f)) v += off;
        }
        check(max_diff(fq::fc(xo), c), "offset cancellation", seed);
        check(max_diff(fq::rfn(x, 1.0), oracle_ifn(x)), "rfn lambda=1", seed);
        check(max_diff(fq::rfn(x, 0.0), oracle_layernorm(x)), "rfn lambda=0", seed);
    }
    const double secs = seconds_since(t0);
    o.require(secs < 5.0, "runtime " + fmt(secs, 2) + " s >= 5 s");
    report(1, "normalization algebra", o, "100 tensors, max err " + sci(worst) + ", " + fmt(secs, 2) + " s");
}

void criterion_2() {
    const auto t0 = Clock::now();
    Outcome o;
    const fq::FeatureConfig cfg;
    const std::uint32_t sr = 16000;

    // Pure tone at bin 64 (1000 Hz): brute-force DFT of the windowed frame.
    fq::Waveform tone{std::vector<double>(16000), sr};
    for (std::size_t i = 0; i < tone.size(); ++i)
        tone.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * double(i) / sr);
    const auto p = fq::stft_power(tone, cfg);
    double worst_rel = 0.0;
    for (std::size_t t : {0u, 40u, 96u}) {
        std::vector<double> ref(513);
        for (std::size_t k = 0; k < 513; ++k) {
            std::complex<double> acc;
            for (std::size_t n = 0; n < 640; ++n) {
                const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(n) / 640.0);
                acc += tone.samples[t * 160 + n] * w * std::polar(1.0, -2.0 * std::numbers::pi * double(k * n) / 1024.0);
            }
            ref[k] = std::norm(acc);
        }
        const auto peak = std::max_element(ref.begin(), ref.end()) - ref.begin();
        double best = -1.0;
        std::size_t arg = 0;
        for (std::size_t k = 0; k < 513; ++k) {
            worst_rel = std::max(worst_rel, std::abs(p(k, t) - ref[k]) / (ref[peak] + 1e-300));
            if (p(k, t) > best) best = p(k, t), arg = k;
        }
        o.require(arg == 64 && peak == 64, "tone peak at bin " + std::to_string(arg) + " frame " + std::to_string(t));
    }
    o.require(worst_rel < 1e-9, "stft differs from DFT by " + sci(worst_rel));

    // Gain a shifts every cell above the floor by 20 log10(a) dB.
    fq::Rng rng(3);
    fq::Waveform noise{std::vector<double>(16000), sr};
    for (double& s : noise.samples) s = 0.1 * fq::gaussian(rng);
    const auto base = fq::logmel(noise, cfg);
    double worst_db = 0.0;
    for (double a : {0.5, 2.0, 3.7}) {
        fq::Waveform g = noise;
        for (double& s : g.samples) s *= a;
        const auto shifted = fq::logmel(g, cfg);
        for (std::size_t i = 0; i < base.data.size(); ++i)
            if (base.data.values()[i] > -90.0)
                worst_db = std::max(worst_db, std::abs(shifted.data.values()[i] - base.data.values()[i] - 20.0 * std::log10(a)));
    }
    o.require(worst_db <= 1e-6, "gain shift error " + sci(worst_db) + " dB");

    // Frame count 1 + floor((n - 640) / 160).
    for (std::size_t n : {640u, 799u, 800u, 16000u, 32000u}) {
        const std::size_t expect = 1 + (n - 640) / 160;
        fq::Waveform w{std::vector<double>(n, 0.0), sr};
        o.require(fq::stft_power(w, cfg).cols() == expect && fq::frame_count(n, 640, 160) == expect,
                  "frame count for n=" + std::to_string(n));
    }
    const double m1000 = 2595.0 * std::log10(1.0 + 1000.0 / 700.0);
    o.require(std::abs(fq::hz_to_mel(1000.0) - 999.99) < 0.01 && std::abs(fq::hz_to_mel(1000.0) - m1000) < 1e-9,
              "mel(1000) = " + std::to_string(fq::hz_to_mel(1000.0)));
    const double secs = seconds_since(t0);
    o.require(secs < 10.0, "runtime " + fmt(secs, 2) + " s >= 10 s");
    report(2, "DSP oracles", o,
           "stft rel err " + sci(worst_rel) + ", gain err " + sci(worst_db) + " dB, mel(1000)=" +
               fmt(fq::hz_to_mel(1000.0), 3) + ", " + fmt(secs, 2) + " s");
}

void criterion_3(const fs::path& corpus_dir) {
    Outcome o;
    const auto c = fq::load_corpus(corpus_dir);
    const double floor_db = 10.0 * std::log10(fq::FeatureConfig{}.log_floor);
    std::map<std::uint64_t, std::map<int, std::size_t>> groups;  // clip seed -> device -> index
    for (std::size_t i : c.split_indices("test")) groups[c.entry(i).clip_seed][c.device[i]] = i;
    double worst = 0.0;
    std::size_t pairs = 0, skipped = 0;
    for (const auto& [seed, by_dev] : groups) {
        const auto seen_it = by_dev.find(0);
        if (seen_it == by_dev.end()) {
            o.require(false, "clip without seen-device recording");
            continue;
        }
        const auto& xs = c.specs[seen_it->second].data;
        const auto cs = fq::fc(xs);
        for (const auto& [dev, idx] : by_dev) {
            if (dev == 0) continue;
            const auto& xu = c.specs[idx].data;
            const auto cu = fq::fc(xu);
            ++pairs;
            for (std::size_t k = 0; k < cu.size(); ++k) {
                if (xs.values()[k] <= floor_db + 1e-6 || xu.values()[k] <= floor_db + 1e-6) {
                    ++skipped;
                    continue;
                }
                worst = std::max(worst, std::abs(cu.values()[k] - cs.values()[k]));
            }
        }
    }
    o.require(pairs == 100 * (c.device_ids.size() - 1), "unexpected pair count " + std::to_string(pairs));
    o.require(worst < 1e-4, "max diff " + sci(worst) + " dB");
    report(3, "parallel-recording cancellation", o,
           std::to_string(pairs) + " clip/device pairs, max |fc diff| " + sci(worst) + " dB, " +
               std::to_string(skipped) + " floor cells skipped");
}

void criterion_4(const fs::path& root, const std::vector<std::uint64_t>& seeds, double synth_probe_secs) {
    Outcome o;
    std::string summary;
    for (std::uint64_t s : seeds) {
        const auto csv = read_csv(root / ("seed" + std::to_string(s)) / "probe_report.csv");
        const auto n_dev = fq::load_manifest(root / ("seed" + std::to_string(s))).device_ids().size();
        const double chance = 1.0 / double(n_dev);
        auto find = [&](const std::string& norm, const std::string& stat, const std::string& target) {
            for (std::size_t r = 0; r < csv.rows.size(); ++r)
                if (csv.str(r, "norm") == norm && csv.str(r, "depth") == "0" && csv.str(r, "axis") == "frequency" &&
                    csv.str(r, "stat") == stat && csv.str(r, "target") == target)
                    return csv.num(r, "accuracy");
            throw std::runtime_error("probe row missing: " + norm + " " + stat + " " + target);
        };
        const double none_dev = find("none", "mean", "device");
        const double fc_dev = find("fc", "mean", "device");
        const double fc_scene = find("fc", "std", "scene");
        const std::string tag = "seed " + std::to_string(s);
        o.require(none_dev >= 0.95, tag + " none device " + fmt(none_dev));
        o.require(fc_dev <= chance + 0.10, tag + " fc device " + fmt(fc_dev));
        o.require(fc_scene >= 0.80, tag + " fc scene " + fmt(fc_scene));
        summary += tag + ": none dev " + fmt(none_dev) + ", fc dev " + fmt(fc_dev) + ", fc scene " + fmt(fc_scene) + "; ";
    }
    o.require(synth_probe_secs < 120.0, "runtime " + fmt(synth_probe_secs, 1) + " s >= 120 s");
    report(4, "depth-0 probe", o, summary + fmt(synth_probe_secs, 1) + " s");
}

void criterion_5(const fs::path& dir) {
    Outcome o;
    const auto csv = read_csv(dir / "device_table.csv");
    double base_seen = NAN, base_unseen = NAN, sfc09 = NAN;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        if (csv.str(r, "method") == "baseline") {
            base_seen = csv.num(r, "seen");
            base_unseen = csv.num(r, "unseen_avg");
        }
        if (csv.str(r, "method") == "sfc" && csv.str(r, "lambda") == "0.9000") sfc09 = csv.num(r, "unseen_avg");
    }
    o.require(csv.rows.size() == 7, "expected 7 rows, got " + std::to_string(csv.rows.size()));
    o.require(sfc09 - base_unseen >= 0.15, "sfc(0.9) unseen gain " + fmt(sfc09 - base_unseen));
    o.require(base_seen - base_unseen >= 0.15, "baseline seen-unseen gap " + fmt(base_seen - base_unseen));
    report(5, "device table ordering", o,
           "baseline seen " + fmt(base_seen) + ", baseline unseen " + fmt(base_unseen) + ", sfc(0.9) unseen " + fmt(sfc09) +
               " (mean of 3 repetitions)");
}

void criterion_6(const fs::path& dir, double secs) {
    Outcome o;
    const auto csv = read_csv(dir / "lambda_sweep.csv");
    o.require(csv.rows.size() == 11, "expected 11 rows, got " + std::to_string(csv.rows.size()));
    std::map<std::string, std::pair<double, double>> by_lambda;
    for (std::size_t r = 0; r < csv.rows.size(); ++r)
        by_lambda[csv.str(r, "lambda")] = {csv.num(r, "seen"), csv.num(r, "unseen")};
    const auto l0 = by_lambda["0.0000"], l9 = by_lambda["0.9000"], l10 = by_lambda["1.0000"];
    o.require(l9.second > l0.second, "unseen(0.9) " + fmt(l9.second) + " <= unseen(0) " + fmt(l0.second));
    o.require(l10.second > l0.second, "unseen(1.0) " + fmt(l10.second) + " <= unseen(0) " + fmt(l0.second));
    o.require(l0.first >= l10.first, "seen(0) " + fmt(l0.first) + " < seen(1) " + fmt(l10.first));
    o.require(secs < 600.0, "runtime " + fmt(secs, 1) + " s");
    report(6, "lambda sweep shape", o,
           "unseen 0/0.9/1.0 = " + fmt(l0.second) + "/" + fmt(l9.second) + "/" + fmt(l10.second) + ", seen 0/1.0 = " +
               fmt(l0.first) + "/" + fmt(l10.first) + ", " + fmt(secs, 1) + " s");
}

void criterion_7(const fs::path& dir) {
    Outcome o;
    const auto csv = read_csv(dir / "placement.csv");
    const double chance = 1.0 / double(fq::load_manifest(dir).device_ids().size());
    std::map<std::string, std::size_t> row;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) row[csv.str(r, "placement")] = r;
    o.require(csv.rows.size() == 3 && row.count("input") && row.count("input+first_block") && row.count("all_blocks"),
              "placement rows missing");
    if (!o.pass) return report(7, "placement ablation", o, "");
    const double in_dev = csv.num(row["input"], "input_device_acc");
    const double in_scene = csv.num(row["input"], "final_scene_acc");
    const double first_scene = csv.num(row["input+first_block"], "final_scene_acc");
    const double all_scene = csv.num(row["all_blocks"], "final_scene_acc");
    o.require(in_dev <= chance + 0.10, "input depth-0 device " + fmt(in_dev));
    o.require(all_scene <= in_scene, "all_blocks final scene " + fmt(all_scene) + " > input " + fmt(in_scene));
    report(7, "placement ablation", o,
           "input depth-0 device " + fmt(in_dev) + "; final scene input/first/all = " + fmt(in_scene) + "/" +
               fmt(first_scene) + "/" + fmt(all_scene));
}

void criterion_8() {
    Outcome o;
    double worst = 0.0;
    for (std::uint64_t p = 0; p < 10; ++p) {
        fq::Rng rng(fq::mix_seed(808, p));
        const std::size_t K = 2 + p % 4, nf = 3 + p % 5, n = 20 + 3 * p;
        fq::TrainSet s;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> x(nf), t(K, 0.0);
            for (double& v : x) v = fq::gaussian(rng);
            t[static_cast<std::size_t>(fq::uniform_int(rng, 0, long(K) - 1))] = 1.0;
            s.features.push_back(x);
            s.targets.push_back(t);
        }
        fq::LinearModel m(K, nf);
        for (double& w : m.weight.values()) w = fq::gaussian(rng, 0.0, 0.5);
        for (double& b : m.bias) b = fq::gaussian(rng, 0.0, 0.5);
        worst = std::max(worst, fq::grad_check(m, s, 1e-3, p, 1000));
    }
    o.require(worst < 1e-4, "max relative error " + sci(worst));
    report(8, "gradient check", o, "10 random points, max relative error " + sci(worst));
}

void criterion_9(const fs::path& a, const fs::path& b, const fs::path& config) {
    Outcome o;
    const std::string cfg = " --config " + config.string() + " --seed 7 --out ";
    o.require(run_cli("synth" + cfg + b.string()) == 0, "second synth failed");
    const auto ma = fq::load_manifest(a), mb = fq::load_manifest(b);
    o.require(read_file(a / "manifest.json") == read_file(b / "manifest.json"), "manifest.json differs");
    std::size_t diff_files = 0;
    for (std::size_t i = 0; i < ma.entries.size() && i < mb.entries.size(); ++i)
        diff_files += read_file(a / ma.entries[i].path) != read_file(b / mb.entries[i].path);
    o.require(diff_files == 0, std::to_string(diff_files) + " feature files differ");
    const std::vector<std::pair<std::string, std::vector<std::string>>> cmds{
        {"probe", {"probe_report.csv"}},
        {"table", {"device_table.csv"}},
        {"sweep", {"lambda_sweep.csv"}},
        {"placement", {"placement.csv", "placement_probe.csv"}}};
    std::size_t compared = 0;
    for (const auto& [cmd, files] : cmds) {
        o.require(run_cli(cmd + cfg + b.string()) == 0, "second " + cmd + " failed");
        for (const auto& f : files) {
            ++compared;
            const auto x = read_file(a / f), y = read_file(b / f);
            o.require(!x.empty() && x == y, f + " differs");
        }
    }
    report(9, "determinism", o,
           "manifest + " + std::to_string(ma.entries.size()) + " feature files + " + std::to_string(compared) +
               " CSVs byte-identical across two runs");
}

void criterion_10() {
    Outcome o;
    auto blobs = [](std::uint64_t seed, std::size_t n, double sep) {
        fq::Rng rng(seed);
        fq::LabeledSet s;
        for (int c = 0; c < 2; ++c)
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> v(5);
                for (double& x : v) x = fq::gaussian(rng);
                v[0] += sep * c;
                s.features.push_back(v);
                s.labels.push_back(c);
            }
        return s;
    };
    const auto sep = blobs(1, 100, 8.0);
    fq::ForestConfig cfg;
    cfg.bootstrap = false;
    cfg.max_depth = 0;
    const double train_acc = fq::rf_accuracy(fq::rf_train(sep, cfg), sep);
    o.require(train_acc == 1.0, "separable training accuracy " + fmt(train_acc));

    auto perm = blobs(2, 100, 8.0);
    fq::Rng rng(2);
    std::shuffle(perm.labels.begin(), perm.labels.end(), rng);
    const double held = fq::rf_accuracy(fq::rf_train(perm, fq::ForestConfig{}), blobs(3, 100, 8.0));
    o.require(std::abs(held - 0.5) <= 0.15, "permuted-label held-out accuracy " + fmt(held));
    report(10, "forest sanity", o, "separable train acc " + fmt(train_acc) + ", permuted held-out acc " + fmt(held));
}

}  // namespace

int main() {
    const fs::path config = FREQCENTER_CONFIG;
    const fs::path root = fs::current_path() / "acceptance_out";
    fs::remove_all(root);
    fs::create_directories(root);
    std::cout << "acceptance outputs under " << root << std::endl;

    auto guarded = [](int n, const std::function<void()>& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            Outcome o;
            o.require(false, e.what());
            report(n, "exception", o, "");
        }
    };

    guarded(1, criterion_1);
    guarded(2, criterion_2);
    guarded(8, criterion_8);
    guarded(10, criterion_10);

    const std::vector<std::uint64_t> seeds{7, 11, 23};
    const auto main_dir = root / "seed7";
    bool cli_ok = true;
    const auto t_probe = Clock::now();
    for (auto s : seeds) {
        const auto dir = root / ("seed" + std::to_string(s));
        const std::string args = " --config " + config.string() + " --seed " + std::to_string(s) + " --out " + dir.string();
        cli_ok = cli_ok && run_cli("synth" + args) == 0 && run_cli("probe" + args) == 0;
    }
    const double probe_secs = seconds_since(t_probe);
    if (!cli_ok) {
        Outcome o;
        o.require(false, "synth/probe CLI failed");
        report(4, "depth-0 probe", o, "");
    } else {
        guarded(3, [&] { criterion_3(main_dir); });
        guarded(4, [&] { criterion_4(root, seeds, probe_secs); });
    }

    const std::string args = " --config " + config.string() + " --seed 7 --out " + main_dir.string();
    guarded(5, [&] {
        if (run_cli("table" + args) != 0) throw std::runtime_error("table command failed");
        criterion_5(main_dir);
    });
    guarded(6, [&] {
        const auto t0 = Clock::now();
        if (run_cli("sweep" + args) != 0) throw std::runtime_error("sweep command failed");
        criterion_6(main_dir, seconds_since(t0));
    });
    guarded(7, [&] {
        if (run_cli("placement" + args) != 0) throw std::runtime_error("placement command failed");
        criterion_7(main_dir);
    });
    guarded(9, [&] { criterion_9(main_dir, root / "seed7_rerun", config); });

    std::cout << (g_failures == 0 ? "ALL CRITERIA PASS" : std::to_string(g_failures) + " CRITERIA FAILED") << std::endl;
    return g_failures == 0 ? 0 : 1;
}
