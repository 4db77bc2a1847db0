#pragma once

#include <cstdint>
#include <random>

namespace coex {

// Named sub-streams derived from one master seed. Keeping the streams apart
// means adding draws to one consumer (say the audit) cannot shift the values
// seen by another, which is what makes reruns byte-identical.
enum class Stream : std::uint32_t {
    kPolicy = 1,   // hyperpolicy/theta and action sampling
    kEnv = 2,      // environment transitions and starts
    kAudit = 3,    // Monte-Carlo audit rollouts
    kScratch = 4,  // tests and ad-hoc consumers
};

class RngStream {
  public:
    RngStream() : gen_(0) {}
    RngStream(std::uint64_t master_seed, Stream stream)
        : gen_(make_engine(master_seed, static_cast<std::uint32_t>(stream), 0)) {}
    RngStream(std::uint64_t master_seed, Stream stream, std::uint32_t salt)
        : gen_(make_engine(master_seed, static_cast<std::uint32_t>(stream), salt)) {}

    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }

    // One-shot distribution object so no spare Box-Muller value is carried
    // across calls; keeps consumption per call fixed.
    double normal(double mean, double stddev) {
        return std::normal_distribution<double>(mean, stddev)(gen_);
    }

    int uniform_int(int n) {
        return std::uniform_int_distribution<int>(0, n - 1)(gen_);
    }

    std::mt19937_64& engine() { return gen_; }

  private:
    static std::mt19937_64 make_engine(std::uint64_t seed, std::uint32_t stream,
                                       std::uint32_t salt) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed & 0xffffffffu),
            static_cast<std::uint32_t>(seed >> 32),
            stream,
            salt,
        };
        return std::mt19937_64(seq);
    }

    std::mt19937_64 gen_;
};

}  // namespace coex
