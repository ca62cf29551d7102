#include "psp/oracle.hpp"

#include "psp/error.hpp"
#include "psp/normal.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

namespace psp::mc {

WilsonInterval wilson_interval(long long k, long long n, double confidence) {
    double z = normal_quantile(0.5 + confidence / 2.0);
    double nn = static_cast<double>(n);
    double p = static_cast<double>(k) / nn;
    double denom = 1.0 + z * z / nn;
    double center = p + z * z / (2.0 * nn);
    double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn));
    WilsonInterval out;
    out.lo = (center - half) / denom;
    out.hi = (center + half) / denom;
    if (k == 0) out.lo = 0.0;
    if (k == n) out.hi = 1.0;
    if (out.lo < 0.0) out.lo = 0.0;
    if (out.hi > 1.0) out.hi = 1.0;
    return out;
}

int worker_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("PSP_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1 && cap < hw) hw = cap;
    }
    return hw;
}

namespace {

constexpr long long kChunk = 4096;

} // namespace

OracleEstimate estimate(const slp::StraightLineProgram& slp, long long n, std::uint64_t seed,
                        double confidence) {
    if (n < 100) {
        fail(Error::Kind::Inference, "oracle estimates need at least 100 samples");
    }
    long long chunks = (n + kChunk - 1) / kChunk;
    int workers = worker_count();
    if (chunks < workers) workers = static_cast<int>(chunks);

    std::vector<long long> hits_per_chunk(static_cast<std::size_t>(chunks), 0);
    std::atomic<long long> next_chunk{0};

    auto worker = [&]() {
        slp::Simulator sim(slp);
        for (;;) {
            long long c = next_chunk.fetch_add(1);
            if (c >= chunks) return;
            long long begin = c * kChunk;
            long long end = std::min(n, begin + kChunk);
            std::uint64_t chunk_seed = mix_seed(seed, static_cast<std::uint64_t>(c));
            long long hits = 0;
            for (long long s = begin; s < end; s++) {
                if (sim.run(chunk_seed, static_cast<std::uint64_t>(s - begin))) hits++;
            }
            hits_per_chunk[static_cast<std::size_t>(c)] = hits;
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; w++) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    long long hits = 0;
    for (long long h : hits_per_chunk) hits += h;

    OracleEstimate out;
    out.n = n;
    out.seed = seed;
    out.p_hat = static_cast<double>(hits) / static_cast<double>(n);
    WilsonInterval ci = wilson_interval(hits, n, confidence);
    out.ci_low = ci.lo;
    out.ci_high = ci.hi;
    return out;
}

} // namespace psp::mc
