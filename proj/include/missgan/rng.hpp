#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "missgan/errors.hpp"

namespace missgan {

// Deterministic random stream. Normal deviates use Box-Muller on raw
// uniforms so the draw sequence does not depend on the standard library's
// distribution internals. State round-trips through a string for
// checkpoint resume.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : eng_(seed) {}

    // uniform in [0, 1)
    double uniform() {
        return std::generate_canonical<double, 53>(eng_);
    }

    // uniform integer in [0, n)
    int64_t uniform_int(int64_t n) {
        if (n <= 0) fail(ErrorCategory::Internal, "rng: uniform_int needs n > 0");
        return static_cast<int64_t>(uniform() * static_cast<double>(n)) % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() {
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Derive an independent stream for a named component.
    Rng fork(const std::string& tag) const {
        uint64_t h = 1469598103934665603ull;
        auto mix = [&h](uint64_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        mix(seed_hash());
        for (char c : tag) mix(static_cast<uint64_t>(static_cast<unsigned char>(c)));
        return Rng(h);
    }

    std::string serialize() const {
        std::ostringstream os;
        os << eng_;
        return os.str();
    }

    void deserialize(const std::string& s) {
        std::istringstream is(s);
        is >> eng_;
        if (is.fail()) fail(ErrorCategory::Checkpoint, "rng: bad serialized state");
    }

private:
    uint64_t seed_hash() const {
        // hash the serialized state so forks of an advanced stream differ
        std::string s = serialize();
        uint64_t h = 1469598103934665603ull;
        for (char c : s) {
            h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
            h *= 1099511628211ull;
        }
        return h;
    }

    std::mt19937_64 eng_;
};

} // namespace missgan
