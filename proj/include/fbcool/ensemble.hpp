#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "fbcool/analysis.hpp"
#include "fbcool/grid.hpp"
#include "fbcool/noise.hpp"
#include "fbcool/params.hpp"

namespace fbcool {

/// Scalars recorded at every output stride.
enum Channel : int {
    kEnergy,
    kPop0,
    kPop1,
    kPop2,
    kPop3,
    kParity,
    kXTrue,
    kPTrue,
    kVxTrue,
    kXEst,
    kPEst,
    kVxEst,
    kAmplitude,
    kSlope,
    kChannelCount
};

std::string_view channel_name(Channel c);

using Sample = std::array<double, kChannelCount>;

struct TrajectoryRecord {
    std::uint64_t index = 0;
    std::uint64_t baseSeed = 0;
    std::uint64_t configHash = 0;
    double x0 = 0.0;
    double p0 = 0.0;
    std::vector<double> time;
    std::vector<Sample> samples;
    long steps = 0;
    long clampCount = 0;
    bool clampFlagged = false; // more than 0.1% of steps clamped
    bool failed = false;
    std::string failure;

    std::vector<double> series(Channel c) const;
};

/// Grid, scaled parameters and band basis shared read-only by all workers.
struct EnsembleContext {
    explicit EnsembleContext(const RunConfig& cfg);

    RunConfig config;
    ScaledParams params;
    SpatialGrid grid;
    std::shared_ptr<const BandBasis> bands;
};

/// Initial true-state centroid for one trajectory: position uniform in
/// [0, x_max] with x_max at 58% of the distance to the well edge, momentum
/// making up a fixed centroid energy, random momentum sign.
struct InitialCentroid {
    double x0;
    double p0;
};
double initial_max_displacement(double ktilde);
InitialCentroid draw_initial_centroid(NoiseStream& noise, const ScaledParams& p);

TrajectoryRecord run_trajectory(const EnsembleContext& ctx, std::uint64_t trajectoryIndex);

struct ChannelSeries {
    std::vector<double> mean;
    std::vector<double> se; // empty when fewer than two trajectories
};

struct WindowAverage {
    double mean = 0.0;
    double se = 0.0; // NaN when fewer than two trajectories
};

struct EnsembleStats {
    std::vector<double> time;
    std::array<ChannelSeries, kChannelCount> channels;
    std::vector<double> parityAbsMean;
    std::vector<double> amplitudeHighFraction;
    std::array<WindowAverage, kChannelCount> finalWindow;
    double windowStart = 0.0;
    double windowEnd = 0.0;
    int trajectories = 0;
};

/// Statistics over the non-failed records. Standard errors are taken across
/// trajectories; the final window is [0.9 tMax, tMax] (t = 90..100 at the
/// default tMax). The result does not depend on the order of `records`.
EnsembleStats aggregate(std::vector<const TrajectoryRecord*> records, double highAmplitude,
                        double tMax);

struct EnsembleResult {
    EnsembleStats stats;
    std::vector<TrajectoryRecord> records;
    int failed = 0;
    int flagged = 0;
    bool valid = true; // false when more than 10% of trajectories failed
    double wallSeconds = 0.0;
};

using ProgressFn = std::function<void(int done, int total)>;

/// Runs sim.nTrajectories trajectories on up to `threads` workers.
EnsembleResult run_ensemble(const RunConfig& cfg, int threads = 1, const ProgressFn& progress = {});
EnsembleResult run_ensemble(const EnsembleContext& ctx, int threads = 1, const ProgressFn& progress = {});

void write_ensemble_csv(std::ostream& out, const EnsembleStats& stats);
void write_tracking_csv(std::ostream& out, const TrajectoryRecord& record);

struct SweepRow {
    double epsilon;
    SignalSource source;
    double energyFinalMean;
    double energyFinalSe;
    std::optional<double> theoryCentroid;
    std::optional<double> theorySqueezing;
    int trajectories;
    int failed;
};

/// Final-window energies against epsilon for each source, with the
/// steady-state theory attached.
std::vector<SweepRow> epsilon_sweep(const RunConfig& cfg, const std::vector<double>& epsilons,
                                    const std::vector<SignalSource>& sources, int threads = 1,
                                    const ProgressFn& progress = {});

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// JSON run manifest: resolved config, seeds, failure counts, wall time.
std::string manifest_json(const RunConfig& cfg, std::string_view command, const EnsembleResult* result,
                          double wallSeconds);

} // namespace fbcool
