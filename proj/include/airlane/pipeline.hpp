#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "airlane/ovmodel.hpp"
#include "airlane/planner.hpp"
#include "airlane/reach.hpp"
#include "airlane/route.hpp"
#include "airlane/sim.hpp"

namespace airlane::scn {
struct Scenario;
}

namespace airlane::pipe {

struct PipelineConfig {
    double t_d = 60.0;                     // volume duration, s
    double delta = 15.0;                   // successive-volume overlap, s
    int n_aircraft = 200;                  // batch size per horizon
    double verification_threshold = 0.85;  // holdout coverage to release a volume
    double conflict_threshold = 0.05;      // occupancy probability treated as a conflict
    double cell_size = 10.0;               // occupancy grid cell, m
    double step = 100.0;                   // planner extension step, m
    std::size_t max_nodes = 150;           // planner node budget
    int max_repair_rounds = 10;
    std::uint64_t seed = 0;

    std::size_t iteration_budget = 50000;  // planner growth iterations
    std::size_t opt_factor = 0;            // rope lookahead; 0 = unlimited
    std::size_t training_count = 16;       // trajectories used to fit the bound
    double resample_margin = 50.0;         // m around the previous region
    int max_horizons = 96;                 // hard cap on the horizon loop

    void validate() const;
};

enum class PlanStatus { kAccepted, kFailed };

/// Outcome of one full planning-and-contracting run. When accepted: every
/// volume passed holdout verification, no volume touches a no-fly zone, and
/// the route is free of foreign-contract conflicts.
struct PlanResult {
    Route route;
    ov::Contract contract;
    std::vector<reach::VerificationReport> verification;  // one per volume
    int repairs = 0;
    PlanStatus status = PlanStatus::kFailed;
    std::string reason;  // empty when accepted
    nlohmann::json telemetry = nlohmann::json::array();

    bool accepted() const { return status == PlanStatus::kAccepted; }
};

/// Contract under construction: volumes plus the batches that produced
/// them, kept so later horizons can be regenerated without redoing earlier
/// ones after a route repair.
struct ContractResult {
    ov::Contract contract;
    std::vector<reach::VerificationReport> verification;
    std::vector<sim::TrajectorySet> batches;
    bool ok = false;
    std::string failure_reason;
};

/// Fill in what the planner leaves open: waypoint altitudes at the nominal
/// cruise level, speed bounds from the uncertainty config, departure time
/// preserved.
Route finalize_route(Route route, const scn::Scenario& scenario);

/// Build volumes horizon by horizon over a fixed route until at least half
/// the batch ends within capture radius of the final waypoint. First
/// horizon draws uniform initial states; later horizons resample from the
/// previous batch at the overlap offset. Each horizon: batch simulation,
/// discrepancy fit on a farthest-point training subset, holdout
/// verification, then grid binning.
ContractResult generate_contract(const Route& route, const scn::Scenario& scenario,
                                 const PipelineConfig& cfg);

/// Regenerate horizons >= from_horizon of an existing build against a
/// (possibly changed) route. from_horizon 0 is a full rebuild.
void extend_contract(ContractResult& state, std::size_t from_horizon, const Route& route,
                     const scn::Scenario& scenario, const PipelineConfig& cfg);

/// Earliest horizon whose window an aircraft could reach the first changed
/// waypoint in, allowing for capture-radius corner cutting. Horizons before
/// it are provably unaffected by the reroute.
std::size_t first_affected_horizon(const Route& old_route, const Route& new_route,
                                   const scn::Scenario& scenario, const PipelineConfig& cfg);

/// Full loop: plan, shorten, deconflict against foreign contracts, build
/// volumes, deconflict volumes against no-fly zones, repairing and
/// regenerating until clean or out of repair rounds.
PlanResult plan_and_contract(const scn::Scenario& scenario, const PipelineConfig& cfg);

nlohmann::json result_manifest(const PlanResult& result, const scn::Scenario& scenario,
                               const PipelineConfig& cfg);

/// Write text atomically: temp file in the target directory, then rename.
void atomic_write(const std::string& path, const std::string& content);

/// route.geojson + contract.json + manifest.json under out_dir. Byte-stable
/// for identical (scenario, cfg, seed).
void export_plan_result(const PlanResult& result, const scn::Scenario& scenario,
                        const PipelineConfig& cfg, const std::string& out_dir);

}  // namespace airlane::pipe
