#include "mortboost/synth_oracle.hpp"

#include "mortboost/parallel.hpp"
#include "mortboost/text.hpp"

#include <cmath>
#include <stdexcept>

namespace mortboost {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

std::int64_t poisson_inversion(double mean, CounterStream &stream) {
    const double u = stream.uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::int64_t k = 0;
    // Mean < 10 keeps the tail beyond k = 200 below double resolution.
    while (u > cdf && k < 200) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

std::int64_t poisson_ptrs(double mean, CounterStream &stream) {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = stream.uniform() - 0.5;
        const double v = stream.uniform();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= vr) {
            return static_cast<std::int64_t>(k);
        }
        if (k < 0.0 || (us < 0.013 && v > us)) {
            continue;
        }
        if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            -mean + k * loglam - std::lgamma(k + 1.0)) {
            return static_cast<std::int64_t>(k);
        }
    }
}

std::vector<std::string> config_list(std::string_view value) {
    std::vector<std::string> out;
    for (const auto token : text::split(value, ',')) {
        out.emplace_back(text::trim(token));
    }
    return out;
}

double config_double(std::string_view key, std::string_view value) {
    const auto v = text::parse_double(text::trim(value));
    if (!v || !std::isfinite(*v)) {
        throw std::invalid_argument("'" + std::string(key) + "' needs a number, got '" +
                                    std::string(value) + "'");
    }
    return *v;
}

std::vector<double> config_weights(std::string_view key, std::string_view value) {
    std::vector<double> out;
    for (const auto &token : config_list(value)) {
        const auto w = config_double(key, token);
        if (w < 0.0) {
            throw std::invalid_argument("'" + std::string(key) + "' weights must be >= 0");
        }
        out.push_back(w);
    }
    return out;
}

std::vector<double> normalized(const std::vector<double> &weights) {
    double total = 0.0;
    for (const auto w : weights) {
        total += w;
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("cause weights must have a positive sum");
    }
    std::vector<double> out;
    for (const auto w : weights) {
        out.push_back(w / total);
    }
    return out;
}

} // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
               static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
               static_cast<std::uint32_t>(p0)};
    }
    return ctr;
}

CounterStream::CounterStream(std::uint64_t seed, std::uint64_t cell, std::uint32_t cause) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0u, cause, static_cast<std::uint32_t>(cell), static_cast<std::uint32_t>(cell >> 32)} {}

std::uint32_t CounterStream::next_u32() noexcept {
    if (used_ == 4) {
        block_ = philox4x32(counter_, key_);
        ++counter_[0];
        used_ = 0;
    }
    return block_[used_++];
}

double CounterStream::uniform() noexcept {
    const auto a = next_u32() >> 5;
    const auto b = next_u32() >> 6;
    return (static_cast<double>(a) * 67108864.0 + static_cast<double>(b) + 0.5) /
           9007199254740992.0;
}

std::int64_t sample_poisson(double mean, CounterStream &stream) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw std::invalid_argument("Poisson mean must be finite and >= 0");
    }
    if (mean == 0.0) {
        return 0;
    }
    return mean < 10.0 ? poisson_inversion(mean, stream) : poisson_ptrs(mean, stream);
}

void SimSpec::validate() const {
    const auto &space = q.space();
    if (exposure.size() != space.size()) {
        throw std::invalid_argument("exposure size does not match the rate surface");
    }
    for (const auto e : exposure) {
        if (!(e >= 0.0) || !std::isfinite(e)) {
            throw std::invalid_argument("exposures must be finite and >= 0");
        }
    }
    if (!theta) {
        return;
    }
    if (!buckets || buckets->ages() != space.ages()) {
        throw std::invalid_argument("cause sampling needs buckets covering the rate ages");
    }
    if (!(theta->space() == condensed_space(space, *buckets))) {
        throw std::invalid_argument("theta must live on the condensed space of the rates");
    }
    const auto k_count = theta->cause_count();
    if (causes && causes->size() != k_count) {
        throw std::invalid_argument("cause registry size differs from theta");
    }
    for (std::size_t i = 0; i < theta->space().size(); ++i) {
        double total = 0.0;
        for (std::size_t k = 1; k <= k_count; ++k) {
            total += theta->theta(i, k);
        }
        if (std::abs(total - 1.0) > 1e-9) {
            throw std::invalid_argument("theta must sum to 1 over causes");
        }
    }
    for (const auto &[k, years] : missing_causes) {
        if (k < 1 || k > k_count) {
            throw std::invalid_argument("missing cause index out of range");
        }
        (void)years;
    }
}

MortalityTable sample_deaths(const SimSpec &spec) {
    spec.validate();
    const auto &space = spec.q.space();
    std::vector<std::int64_t> deaths(space.size());
    parallel_for(space.size(), [&](std::size_t i) {
        CounterStream stream(spec.seed, i, 0);
        deaths[i] = sample_poisson(spec.q.rate(i) * spec.exposure[i], stream);
    });
    return MortalityTable(space, spec.exposure, std::move(deaths));
}

CauseSample sample_cause_deaths(const SimSpec &spec) {
    spec.validate();
    if (!spec.theta) {
        throw std::invalid_argument("cause sampling needs a theta surface");
    }
    const auto &space = spec.q.space();
    const auto &theta = *spec.theta;
    const auto &buckets = *spec.buckets;
    const auto k_count = theta.cause_count();
    const auto &condensed = theta.space();

    std::vector<std::int64_t> by_cell(space.size() * k_count);
    parallel_for(space.size(), [&](std::size_t i) {
        const auto x = space.feature_at(i);
        const auto ci = condensed.index(
            {x.gender, static_cast<int>(buckets.bucket_of(x.age)), x.year});
        const double base = spec.q.rate(i) * spec.exposure[i];
        for (std::size_t k = 1; k <= k_count; ++k) {
            CounterStream stream(spec.seed, i, static_cast<std::uint32_t>(k));
            by_cell[i * k_count + (k - 1)] = sample_poisson(theta.theta(ci, k) * base, stream);
        }
    });

    std::vector<std::int64_t> totals(space.size(), 0);
    std::vector<std::int64_t> bucket_sums(condensed.size() * k_count, 0);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        const auto ci = condensed.index(
            {x.gender, static_cast<int>(buckets.bucket_of(x.age)), x.year});
        for (std::size_t k = 0; k < k_count; ++k) {
            totals[i] += by_cell[i * k_count + k];
            bucket_sums[ci * k_count + k] += by_cell[i * k_count + k];
        }
    }
    std::vector<CauseDeathTable::Count> counts(bucket_sums.begin(), bucket_sums.end());
    for (std::size_t ci = 0; ci < condensed.size(); ++ci) {
        const auto year = condensed.feature_at(ci).year;
        for (const auto &[k, years] : spec.missing_causes) {
            if (years.contains(year)) {
                counts[ci * k_count + (k - 1)] = std::nullopt;
            }
        }
    }
    auto registry = spec.causes ? *spec.causes : CauseRegistry::numbered(k_count);
    return CauseSample{
        CauseDeathTable(condensed, buckets, std::move(registry), std::move(counts)),
        MortalityTable(space, spec.exposure, std::move(totals))};
}

SimConfig parse_sim_config(std::string_view input) {
    SimConfig cfg;
    bool weights_seen = false;
    const auto all_lines = text::lines(input);
    for (std::size_t ln = 0; ln < all_lines.size(); ++ln) {
        auto line = all_lines[ln];
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = text::trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("line " + std::to_string(ln + 1) + ": expected key = value");
        }
        const auto key = text::to_lower(text::trim(line.substr(0, eq)));
        const auto value = text::trim(line.substr(eq + 1));
        if (key == "seed") {
            const auto v = text::parse_int(value);
            if (!v || *v < 0) {
                throw std::invalid_argument("seed must be a non-negative integer");
            }
            cfg.seed = static_cast<std::uint64_t>(*v);
        } else if (key == "genders") {
            cfg.genders.clear();
            for (const auto &g : config_list(value)) {
                cfg.genders.push_back(parse_gender(g));
            }
        } else if (key == "ages") {
            cfg.ages = parse_int_range(value);
        } else if (key == "years") {
            cfg.years = parse_int_range(value);
        } else if (key == "exposure") {
            cfg.exposure = config_double(key, value);
        } else if (key == "log_q_level") {
            cfg.log_q_level = config_double(key, value);
        } else if (key == "log_q_age_slope") {
            cfg.log_q_age_slope = config_double(key, value);
        } else if (key == "log_q_trend") {
            cfg.log_q_trend = config_double(key, value);
        } else if (key == "male_offset") {
            cfg.male_offset = config_double(key, value);
        } else if (key == "shock_years") {
            cfg.shock_years = parse_int_range(value);
        } else if (key == "shock_factor") {
            cfg.shock_factor = config_double(key, value);
        } else if (key == "causes") {
            const auto k = text::parse_int(value);
            if (!k || *k < 1) {
                throw std::invalid_argument("causes must be a positive count");
            }
            cfg.cause_weights.assign(static_cast<std::size_t>(*k), 1.0);
            weights_seen = true;
        } else if (key == "cause_weights") {
            cfg.cause_weights = config_weights(key, value);
            weights_seen = true;
        } else if (key == "cause_shift_year") {
            const auto y = text::parse_int(value);
            if (!y) {
                throw std::invalid_argument("cause_shift_year must be an integer");
            }
            cfg.cause_shift_year = static_cast<int>(*y);
        } else if (key == "cause_weights_after") {
            cfg.cause_weights_after = config_weights(key, value);
        } else if (key == "buckets") {
            cfg.buckets = std::string(value);
        } else if (key == "missing_cause") {
            const auto at = value.find('@');
            const auto k = text::parse_int(value.substr(0, at));
            if (at == std::string_view::npos || !k || *k < 1) {
                throw std::invalid_argument("missing_cause must look like k@A:B");
            }
            cfg.missing_causes.emplace_back(static_cast<std::size_t>(*k),
                                            parse_int_range(value.substr(at + 1)));
        } else {
            throw std::invalid_argument("line " + std::to_string(ln + 1) + ": unknown key '" +
                                        key + "'");
        }
    }
    if (!weights_seen && (!cfg.buckets.empty() || !cfg.missing_causes.empty() ||
                          !cfg.cause_weights_after.empty())) {
        throw std::invalid_argument("cause settings need 'causes' or 'cause_weights'");
    }
    return cfg;
}

SimSpec build_sim_spec(const SimConfig &cfg) {
    if (!(cfg.exposure >= 0.0)) {
        throw std::invalid_argument("exposure must be >= 0");
    }
    if (!(cfg.shock_factor >= 0.0)) {
        throw std::invalid_argument("shock_factor must be >= 0");
    }
    FeatureSpace space(cfg.genders, cfg.ages, cfg.years);
    std::vector<double> q(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto x = space.feature_at(i);
        double log_q = cfg.log_q_level + cfg.log_q_age_slope * (x.age - cfg.ages.first) +
                       cfg.log_q_trend * (x.year - cfg.years.first);
        if (x.gender == Gender::male) {
            log_q += cfg.male_offset;
        }
        double rate = std::exp(log_q);
        if (cfg.shock_years && cfg.shock_years->contains(x.year)) {
            rate *= cfg.shock_factor;
        }
        q[i] = std::min(1.0, rate);
    }
    SimSpec spec{RateSurface(space, std::move(q)),
                 std::vector<double>(space.size(), cfg.exposure), cfg.seed, std::nullopt,
                 std::nullopt, std::nullopt, cfg.missing_causes};
    if (cfg.cause_weights.empty()) {
        return spec;
    }
    const auto before = normalized(cfg.cause_weights);
    const auto after =
        cfg.cause_weights_after.empty() ? before : normalized(cfg.cause_weights_after);
    if (after.size() != before.size()) {
        throw std::invalid_argument("cause_weights_after needs one weight per cause");
    }
    auto buckets = cfg.buckets.empty() ? AgeBucketing::identity(cfg.ages)
                                       : AgeBucketing::parse(cfg.buckets, cfg.ages);
    const auto condensed = condensed_space(space, buckets);
    const auto k_count = before.size();
    std::vector<double> theta(condensed.size() * k_count);
    for (std::size_t i = 0; i < condensed.size(); ++i) {
        const auto year = condensed.feature_at(i).year;
        const auto &w = cfg.cause_shift_year && year >= *cfg.cause_shift_year ? after : before;
        for (std::size_t k = 0; k < k_count; ++k) {
            theta[i * k_count + k] = w[k];
        }
    }
    spec.theta = ThetaSurface(condensed, k_count, std::move(theta));
    spec.buckets = std::move(buckets);
    spec.causes = k_count == 12 ? CauseRegistry::swiss_default() : CauseRegistry::numbered(k_count);
    spec.validate();
    return spec;
}

} // namespace mortboost
