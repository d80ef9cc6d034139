#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ftc/angles.hpp"
#include "ftc/error.hpp"
#include "ftc/linalg.hpp"
#include "ftc/thrusters.hpp"

// Residual-based thruster fault detection and identification.
//
// Detection watches the motion-control-error residual. Identification uses
// the fact that in steady state the physical wrench needed to hold the pose
// does not change when a thruster degrades, so the commanded wrench drifts
// by M_tau * deltaW, where column i of M_tau is the wrench direction lost
// with thruster i. Matching the drift against single columns (or pairs of
// columns) recovers both the faulty thruster and its relative thrust loss.

namespace ftc {

// Scalar residual combining position error and weighted heading error.
inline double residual(const Vec3& e_eta, double c1) {
    if (c1 <= 0.0) throw config_error("residual: c1 must be positive");
    return std::sqrt(e_eta[0] * e_eta[0] + e_eta[1] * e_eta[1] + c1 * e_eta[2] * e_eta[2]);
}

struct FaultSignature {
    Mat34 m_tau{};          // wrench-deviation directions, one column per thruster
    Vec4 tau_shares{};      // tau_i = cos(alpha) * F_i, the per-column scale
    Vec3 tau_c_baseline{};  // pre-fault commanded wrench
    double lever_secant = 0.267;
    std::array<bool, 4> weak_column{};  // |tau_i| < ratio * max|tau_j|

    bool any_weak() const {
        return weak_column[0] || weak_column[1] || weak_column[2] || weak_column[3];
    }
};

// Assemble the signature from the latched baseline wrench. Column i is
// Tconf(:,i) * F_i with F = Tconf^+ tau_c, so tau_c - M_tau*deltaW exactly
// reproduces the mixed wrench under per-thruster losses deltaW.
inline FaultSignature build_signature(const Vec3& tau_c_baseline, const ThrusterGeometry& geom,
                                      double weak_ratio = 0.05) {
    FaultSignature sig;
    sig.tau_c_baseline = tau_c_baseline;
    sig.lever_secant = geom.lever_secant();

    const Mat34 tconf = build_tconf(geom);
    const Vec4 f_cmd = pinv(tconf) * tau_c_baseline;
    const double c = std::cos(geom.orientation);
    for (std::size_t i = 0; i < 4; ++i) {
        sig.tau_shares[i] = c * f_cmd[i];
        for (std::size_t r = 0; r < 3; ++r) sig.m_tau(r, i) = tconf(r, i) * f_cmd[i];
    }

    double tmax = 0.0;
    for (std::size_t i = 0; i < 4; ++i) tmax = std::max(tmax, std::abs(sig.tau_shares[i]));
    for (std::size_t i = 0; i < 4; ++i)
        sig.weak_column[i] = std::abs(sig.tau_shares[i]) < weak_ratio * tmax;
    return sig;
}

// Signature wrapper for an externally supplied matrix (test fixtures).
inline FaultSignature signature_from_matrix(const Mat34& m_tau, double lever_secant = 0.267,
                                            double weak_ratio = 0.05) {
    FaultSignature sig;
    sig.m_tau = m_tau;
    sig.lever_secant = lever_secant;
    for (std::size_t i = 0; i < 4; ++i) sig.tau_shares[i] = m_tau(0, i);
    double tmax = 0.0;
    for (std::size_t i = 0; i < 4; ++i) tmax = std::max(tmax, std::abs(sig.tau_shares[i]));
    for (std::size_t i = 0; i < 4; ++i)
        sig.weak_column[i] = std::abs(sig.tau_shares[i]) < weak_ratio * tmax;
    return sig;
}

// Commanded-wrench deviation b_tau = tau_c(now) - tau_c(baseline).
inline Vec3 deviation(const Vec3& tau_c_now, const Vec3& tau_c_baseline) {
    return tau_c_now - tau_c_baseline;
}

struct SingleFaultFit {
    double delta_w = 0.0;
    double rmse = std::numeric_limits<double>::infinity();
    int thruster = -1;  // 0-based; -1 when no admissible candidate exists
    std::array<double, 4> candidate_rmse{};
};

struct DoubleFaultFit {
    double delta_w1 = 0.0;
    double delta_w2 = 0.0;
    double rmse = std::numeric_limits<double>::infinity();
    int thruster1 = -1;
    int thruster2 = -1;
    std::array<double, 6> candidate_rmse{};
};

inline constexpr std::array<std::pair<int, int>, 6> kColumnPairs{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

// Single-fault identification: project b_tau on each signature column and
// keep the best admissible fit. A loss must be positive (same direction as
// the column) and at most 1; anything else gets infinite rmse.
inline SingleFaultFit tfault_id_single(const FaultSignature& sig, const Vec3& b_tau) {
    SingleFaultFit best;
    for (int i = 0; i < 4; ++i) {
        const Vec3 col = vec3(sig.m_tau(0, i), sig.m_tau(1, i), sig.m_tau(2, i));
        const double g = dot(col, col);
        double r = std::numeric_limits<double>::infinity();
        double dw = 0.0;
        if (g > 1e-300) {
            dw = dot(col, b_tau) / g;
            if (dw > 0.0 && dw <= 1.0) r = rmse3(b_tau - col * dw);
        }
        best.candidate_rmse[static_cast<std::size_t>(i)] = r;
        if (r < best.rmse) {
            best.rmse = r;
            best.delta_w = dw;
            best.thruster = i;
        }
    }
    return best;
}

// Double-fault identification over the six unordered column pairs. Pairs
// whose 2x2 Gram matrix is numerically singular (both columns tiny or
// parallel) are excluded; if every pair is degenerate this is an error.
inline DoubleFaultFit tfault_id_double(const FaultSignature& sig, const Vec3& b_tau) {
    DoubleFaultFit best;
    int degenerate = 0;
    for (std::size_t p = 0; p < kColumnPairs.size(); ++p) {
        const auto [i, j] = kColumnPairs[p];
        Mat32 a{};
        for (std::size_t r = 0; r < 3; ++r) {
            a(r, 0) = sig.m_tau(r, static_cast<std::size_t>(i));
            a(r, 1) = sig.m_tau(r, static_cast<std::size_t>(j));
        }
        const Mat<2, 2> g = a.transposed() * a;
        double r = std::numeric_limits<double>::infinity();
        double w1 = 0.0, w2 = 0.0;
        if (detail::gram_condition(g) > detail::kPinvConditionLimit) {
            ++degenerate;
        } else {
            const Mat<2, 1> w = inverse2(g) * (a.transposed() * b_tau);
            w1 = w[0];
            w2 = w[1];
            if (w1 > 0.0 && w1 <= 1.0 && w2 > 0.0 && w2 <= 1.0)
                r = rmse3(b_tau - a * w);
        }
        best.candidate_rmse[p] = r;
        if (r < best.rmse) {
            best.rmse = r;
            best.delta_w1 = w1;
            best.delta_w2 = w2;
            best.thruster1 = i;
            best.thruster2 = j;
        }
    }
    if (degenerate == static_cast<int>(kColumnPairs.size()))
        throw numeric_error("tfault_id_double: all column pairs are degenerate");
    return best;
}

struct FdiParams {
    double c1 = (180.0 / kPi) * (180.0 / kPi);  // heading normalization in the residual
    double c2 = 0.005;                          // detection threshold
    double c3 = 0.1;                            // single-fit rmse criterion, N
    double c4 = 0.1;                            // pair-fit rmse criterion, N
    double t1 = 20.0;                           // s, wait before identification
    double t2 = 25.0;                           // s, apply reconfiguration
    double t3 = 35.0;                           // s, re-arm
    double arm_time = 50.0;      // s, detector inhibited until the loop has settled
    double baseline_window = 10.0;   // s, mean of tau_c latched as the pre-fault baseline
    double deviation_window = 2.0;  // s, running mean of tau_c for b_tau
    double weak_column_ratio = 0.05;
    double failure_threshold = 0.05;  // estimated weight at/below this marks the thruster failed
    bool reconfigure = true;          // allow the What update at T2
    bool normalize_rmse = false;      // divide fit rmse by |b_tau| (small-signal option)

    void validate() const {
        if (!(t1 < t2 && t2 < t3)) throw config_error("fdi: timings must satisfy T1 < T2 < T3");
        if (c1 <= 0.0 || c2 <= 0.0 || c3 <= 0.0 || c4 <= 0.0)
            throw config_error("fdi: thresholds must be positive");
        if (baseline_window <= 0.0 || deviation_window <= 0.0)
            throw config_error("fdi: averaging windows must be positive");
    }
};

enum class FdiEventKind {
    kDetected,
    kIdentifiedSingle,
    kIdentifiedDouble,
    kReconfigured,
    kInconclusive,
    kRearmed,
    kWeakColumn,
    kExceedanceIgnored,
};

inline const char* to_string(FdiEventKind k) {
    switch (k) {
        case FdiEventKind::kDetected: return "detected";
        case FdiEventKind::kIdentifiedSingle: return "identified-single";
        case FdiEventKind::kIdentifiedDouble: return "identified-double";
        case FdiEventKind::kReconfigured: return "reconfigured";
        case FdiEventKind::kInconclusive: return "inconclusive";
        case FdiEventKind::kRearmed: return "re-armed";
        case FdiEventKind::kWeakColumn: return "weak-column";
        case FdiEventKind::kExceedanceIgnored: return "exceedance-ignored";
    }
    return "?";
}

struct FdiEvent {
    double time = 0.0;
    FdiEventKind kind{};
    std::string detail;
};

// Deterministic supervisor advanced once per control step. Detection is a
// one-shot latch; the identification window accumulates per-candidate votes
// and averages each candidate's loss estimates over its own votes, which is
// the per-thruster average the T2 update applies.
class FdiSupervisor {
public:
    FdiSupervisor(const FdiParams& params, const ThrusterGeometry& geom, double dt)
        : params_(params), geom_(geom), dt_(dt) {
        params_.validate();
        history_capacity_ = static_cast<std::size_t>(
            std::max(params_.baseline_window, params_.deviation_window) / dt + 0.5);
        if (history_capacity_ < 1) history_capacity_ = 1;
    }

    bool fault_window_active() const { return fault_trig_; }
    bool armed() const { return b_first_; }
    double fault_time() const { return t_c_; }
    const std::optional<FaultSignature>& signature() const { return signature_; }
    double last_residual() const { return last_residual_; }

    // One control step: residual check, detection latch, identification
    // votes, reconfiguration at T2, re-arm at T3. May modify the estimated
    // weights in `bank`. Events are appended to `events`.
    void update(double t, const Vec3& e_eta, const Vec3& tau_c, ThrusterBank& bank,
                std::vector<FdiEvent>& events) {
        const double r_det = residual(e_eta, params_.c1);
        last_residual_ = r_det;

        if (!fault_trig_) {
            if (t >= params_.arm_time && b_first_ && r_det > params_.c2) {
                trigger(t, events);
            }
        } else {
            const double elapsed = t - t_c_;
            if (r_det > params_.c2 && !exceedance_logged_ && elapsed > params_.t3 * 0.5) {
                // New exceedance deep in an active window cannot re-trigger;
                // surface it once for the log reader.
                events.push_back({t, FdiEventKind::kExceedanceIgnored, ""});
                exceedance_logged_ = true;
            }
            if (elapsed > params_.t1 && !update_applied_) {
                if (elapsed < params_.t2) {
                    accumulate_vote();
                } else {
                    apply_update(t, bank, events);
                    update_applied_ = true;
                }
            }
            if (elapsed >= params_.t3) {
                rearm(t, events);
            }
        }

        push_history(tau_c);
    }

    // Mean of the stored tau_c history over the trailing `window` seconds.
    Vec3 history_mean(double window) const {
        std::size_t n = static_cast<std::size_t>(window / dt_ + 0.5);
        n = std::min(std::max<std::size_t>(n, 1), history_.size());
        Vec3 acc{};
        for (std::size_t k = history_.size() - n; k < history_.size(); ++k) acc += history_[k];
        return acc * (1.0 / static_cast<double>(n));
    }

private:
    void push_history(const Vec3& tau_c) {
        history_.push_back(tau_c);
        if (history_.size() > history_capacity_) history_.pop_front();
    }

    void trigger(double t, std::vector<FdiEvent>& events) {
        fault_trig_ = true;
        b_first_ = false;
        t_c_ = t;
        exceedance_logged_ = false;
        update_applied_ = false;
        single_votes_.fill(0);
        single_sum_.fill(0.0);
        pair_votes_.fill(0);
        pair_sum1_.fill(0.0);
        pair_sum2_.fill(0.0);

        const Vec3 baseline =
            history_.empty() ? Vec3{} : history_mean(params_.baseline_window);
        signature_ = build_signature(baseline, geom_, params_.weak_column_ratio);
        events.push_back({t, FdiEventKind::kDetected,
                          "residual=" + format(last_residual_) + " baseline=" +
                              format(baseline[0]) + "," + format(baseline[1]) + "," +
                              format(baseline[2])});
        if (signature_->any_weak()) {
            std::string cols;
            for (int i = 0; i < 4; ++i)
                if (signature_->weak_column[static_cast<std::size_t>(i)])
                    cols += (cols.empty() ? "" : ",") + std::to_string(i + 1);
            events.push_back({t, FdiEventKind::kWeakColumn,
                              "thrusters=" + cols + " (losses there may be undetectable)"});
        }
    }

    void accumulate_vote() {
        if (!signature_) return;
        // The signature is rebuilt from the current commanded wrench each
        // step: the loss scales the commanded thrust, so the deviation is
        // delta_w times the *post-fault* column. Fitting against the
        // baseline column would overestimate every loss by the allocation
        // feedback factor.
        const Vec3 tau_c_now = history_mean(params_.deviation_window);
        const Vec3 b_tau = deviation(tau_c_now, signature_->tau_c_baseline);
        const FaultSignature sig_now =
            build_signature(tau_c_now, geom_, params_.weak_column_ratio);
        const double scale =
            params_.normalize_rmse ? std::max(norm(b_tau), 1e-12) : 1.0;

        const SingleFaultFit single = tfault_id_single(sig_now, b_tau);
        last_single_rmse_ = single.candidate_rmse;
        if (single.thruster >= 0 && single.rmse / scale <= params_.c3) {
            single_votes_[static_cast<std::size_t>(single.thruster)] += 1;
            single_sum_[static_cast<std::size_t>(single.thruster)] += single.delta_w;
            return;
        }
        DoubleFaultFit pair;
        try {
            pair = tfault_id_double(sig_now, b_tau);
        } catch (const numeric_error&) {
            return;  // all pairs degenerate this step; no vote
        }
        last_pair_rmse_ = pair.candidate_rmse;
        if (pair.thruster1 >= 0 && pair.rmse / scale <= params_.c4) {
            for (std::size_t p = 0; p < kColumnPairs.size(); ++p) {
                if (kColumnPairs[p].first == pair.thruster1 &&
                    kColumnPairs[p].second == pair.thruster2) {
                    pair_votes_[p] += 1;
                    pair_sum1_[p] += pair.delta_w1;
                    pair_sum2_[p] += pair.delta_w2;
                    break;
                }
            }
        }
    }

    void apply_update(double t, ThrusterBank& bank, std::vector<FdiEvent>& events) {
        int best_single = -1, best_pair = -1;
        int best_single_votes = 0, best_pair_votes = 0;
        for (int i = 0; i < 4; ++i)
            if (single_votes_[static_cast<std::size_t>(i)] > best_single_votes) {
                best_single_votes = single_votes_[static_cast<std::size_t>(i)];
                best_single = i;
            }
        for (std::size_t p = 0; p < kColumnPairs.size(); ++p)
            if (pair_votes_[p] > best_pair_votes) {
                best_pair_votes = static_cast<int>(pair_votes_[p]);
                best_pair = static_cast<int>(p);
            }

        if (best_single_votes == 0 && best_pair_votes == 0) {
            // Surface the candidate table so near-undetectable columns are
            // visible in the log.
            std::string detail = "no admissible fit passed the rmse criteria in (T1, T2); "
                                 "last rmse singles=";
            for (std::size_t i = 0; i < 4; ++i)
                detail += (i ? "," : "") + format(last_single_rmse_[i]);
            detail += " pairs=";
            for (std::size_t p = 0; p < 6; ++p)
                detail += (p ? "," : "") + format(last_pair_rmse_[p]);
            events.push_back({t, FdiEventKind::kInconclusive, detail});
            return;
        }

        // Single-fault model preferred on ties: it is checked first and the
        // pair model nests it.
        if (best_single_votes >= best_pair_votes) {
            const std::size_t n = static_cast<std::size_t>(best_single);
            const double dw = single_sum_[n] / best_single_votes;
            events.push_back({t, FdiEventKind::kIdentifiedSingle,
                              "thruster=" + std::to_string(best_single + 1) +
                                  " delta_w=" + format(dw) +
                                  " votes=" + std::to_string(best_single_votes)});
            if (params_.reconfigure) reconfigure_one(t, bank, best_single, dw, events);
        } else {
            const auto [i, j] = kColumnPairs[static_cast<std::size_t>(best_pair)];
            const double dw1 = pair_sum1_[static_cast<std::size_t>(best_pair)] / best_pair_votes;
            const double dw2 = pair_sum2_[static_cast<std::size_t>(best_pair)] / best_pair_votes;
            events.push_back({t, FdiEventKind::kIdentifiedDouble,
                              "thrusters=" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                  " delta_w=" + format(dw1) + "," + format(dw2) +
                                  " votes=" + std::to_string(best_pair_votes)});
            if (params_.reconfigure) {
                reconfigure_one(t, bank, i, dw1, events);
                reconfigure_one(t, bank, j, dw2, events);
            }
        }
    }

    void reconfigure_one(double t, ThrusterBank& bank, int idx, double dw,
                         std::vector<FdiEvent>& events) {
        const std::size_t n = static_cast<std::size_t>(idx);
        const double before = bank.weights_est[n];
        double after = before * (1.0 - dw);
        if (after <= params_.failure_threshold) {
            after = 0.0;
            bank.failed_est[n] = true;
        }
        bank.weights_est[n] = after;
        events.push_back({t, FdiEventKind::kReconfigured,
                          "thruster=" + std::to_string(idx + 1) + " weight_est=" +
                              format(before) + "->" + format(after) +
                              (bank.failed_est[n] ? " (marked failed)" : "")});
    }

    void rearm(double t, std::vector<FdiEvent>& events) {
        fault_trig_ = false;
        b_first_ = true;
        signature_.reset();
        single_votes_.fill(0);
        single_sum_.fill(0.0);
        pair_votes_.fill(0);
        pair_sum1_.fill(0.0);
        pair_sum2_.fill(0.0);
        update_applied_ = false;
        events.push_back({t, FdiEventKind::kRearmed, ""});
    }

    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return buf;
    }

    FdiParams params_;
    ThrusterGeometry geom_;
    double dt_;

    std::deque<Vec3> history_;
    std::size_t history_capacity_ = 1;

    bool fault_trig_ = false;
    bool b_first_ = true;
    bool update_applied_ = false;
    bool exceedance_logged_ = false;
    double t_c_ = 0.0;
    double last_residual_ = 0.0;
    std::optional<FaultSignature> signature_;

    std::array<int, 4> single_votes_{};
    std::array<double, 4> single_sum_{};
    std::array<int, 6> pair_votes_{};
    std::array<double, 6> pair_sum1_{};
    std::array<double, 6> pair_sum2_{};
    std::array<double, 4> last_single_rmse_{};
    std::array<double, 6> last_pair_rmse_{};
};

}  // namespace ftc
