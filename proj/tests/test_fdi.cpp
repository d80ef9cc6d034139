#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ftc/fdi.hpp"
#include "ftc/rng.hpp"
#include "ftc/thrusters.hpp"

using namespace ftc;

namespace {

const ThrusterGeometry kGeom{deg2rad(45.0), 0.1888};

// Printed reference signature for the 90-degree setpoint study; the third
// column is roughly 13x smaller than the fourth.
Mat34 reference_fixture() {
    return Mat34{{
        3.5178, 5.0833, -0.7511, 9.3522,      //
        -3.5178, 5.0833, -0.7511, -9.3522,    //
        -0.9393, 1.3572, 0.2006, 2.4971       //
    }};
}

Vec3 column(const Mat34& m, int i) {
    return vec3(m(0, static_cast<std::size_t>(i)), m(1, static_cast<std::size_t>(i)),
                m(2, static_cast<std::size_t>(i)));
}

}  // namespace

TEST_CASE("residual basics") {
    const double c1 = (180.0 / kPi) * (180.0 / kPi);
    CHECK(residual(Vec3{}, c1) == 0.0);
    // 3-4-5 triangle lands exactly on the published detection threshold
    CHECK(residual(vec3(0.003, 0.004, 0.0), 17.0) == Catch::Approx(0.005));
    CHECK(residual(vec3(0, 0, 0.001), c1) == Catch::Approx(0.0573).margin(5e-5));
    CHECK_THROWS_AS(residual(Vec3{}, 0.0), config_error);
}

TEST_CASE("signature from an axis wrench loads every thruster equally") {
    for (int axis = 0; axis < 3; ++axis) {
        Vec3 tau_c{};
        tau_c[axis] = (axis == 2) ? 0.5 : 2.0;
        const FaultSignature sig = build_signature(tau_c, kGeom);
        for (int i = 0; i < 4; ++i) {
            CHECK(std::abs(sig.tau_shares[static_cast<std::size_t>(i)]) ==
                  Catch::Approx(std::abs(sig.tau_shares[0])));
            CHECK(std::abs(sig.tau_shares[static_cast<std::size_t>(i)]) > 1e-6);
        }
        CHECK(!sig.any_weak());
        CHECK(rank3(sig.m_tau) == 3);
    }
}

TEST_CASE("signature columns sum to the baseline wrench") {
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 tau_c =
            vec3(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-5, 5));
        const FaultSignature sig = build_signature(tau_c, kGeom);
        const Vec3 total = sig.m_tau * vec4(1, 1, 1, 1);
        CHECK(max_abs(total - tau_c) < 1e-10);
    }
}

TEST_CASE("signature rank is 3 for wrenches with no zero component") {
    Rng rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        Vec3 tau_c;
        for (int i = 0; i < 3; ++i) {
            double v = rng.uniform(-15.0, 15.0);
            if (std::abs(v) < 0.2) v = std::copysign(0.2, v == 0.0 ? 1.0 : v);
            tau_c[i] = v;
        }
        const FaultSignature sig = build_signature(tau_c, kGeom);
        REQUIRE(rank3(sig.m_tau) == 3);
    }
}

TEST_CASE("weak columns are flagged") {
    // tau_c with tau_x + tau_y ~ tau_z/a makes the third share nearly zero
    const double a = kGeom.lever_secant();
    const Vec3 tau_c = vec3(4.0, -2.0, a * 2.001);
    const FaultSignature sig = build_signature(tau_c, kGeom);
    CHECK(sig.weak_column[2]);
    CHECK(!sig.weak_column[3]);
}

TEST_CASE("deviation of the fixture third column matches the printed values") {
    const Mat34 m = reference_fixture();
    const Vec3 b_tau = column(m, 2) * 0.3;
    CHECK(b_tau[0] == Catch::Approx(-0.22533).margin(1e-5));
    CHECK(b_tau[1] == Catch::Approx(-0.22533).margin(1e-5));
    CHECK(b_tau[2] == Catch::Approx(0.06018).margin(1e-5));

    const Vec3 now = vec3(1.0, 2.0, 3.0) + b_tau;
    CHECK(max_abs(deviation(now, vec3(1.0, 2.0, 3.0)) - b_tau) < 1e-12);
}

TEST_CASE("single identification recovers the fixture fault exactly") {
    const FaultSignature sig = signature_from_matrix(reference_fixture());
    const Vec3 b_tau = column(reference_fixture(), 2) * 0.3;
    const SingleFaultFit fit = tfault_id_single(sig, b_tau);
    CHECK(fit.thruster == 2);
    CHECK(fit.delta_w == Catch::Approx(0.3).margin(1e-12));
    CHECK(fit.rmse < 1e-12);
}

TEST_CASE("wrong-direction deviations are rejected") {
    const FaultSignature sig = signature_from_matrix(reference_fixture());
    const Vec3 b_tau = column(reference_fixture(), 0) * -0.2;  // a thrust *gain*
    const SingleFaultFit fit = tfault_id_single(sig, b_tau);
    CHECK(fit.candidate_rmse[0] == std::numeric_limits<double>::infinity());
    // whatever fits best is a poor cross-column match
    if (fit.thruster >= 0) CHECK(fit.rmse > 0.05);
}

TEST_CASE("losses above 1 are inadmissible") {
    const FaultSignature sig = signature_from_matrix(reference_fixture());
    const Vec3 b_tau = column(reference_fixture(), 1) * 1.5;
    const SingleFaultFit fit = tfault_id_single(sig, b_tau);
    CHECK(fit.candidate_rmse[1] == std::numeric_limits<double>::infinity());
}

TEST_CASE("noisy single identification stays accurate") {
    const FaultSignature sig = signature_from_matrix(reference_fixture());
    const Vec3 col3 = column(reference_fixture(), 2);
    Rng rng(77);
    int hits = 0;
    const int trials = 1000;
    for (int trial = 0; trial < trials; ++trial) {
        const Vec3 noise = vec3(rng.normal(), rng.normal(), rng.normal()) * 0.01;
        const SingleFaultFit fit = tfault_id_single(sig, col3 * 0.3 + noise);
        if (fit.thruster == 2 && std::abs(fit.delta_w - 0.3) < 0.05) ++hits;
    }
    CHECK(hits >= 990);
}

TEST_CASE("pair identification recovers the fixture double fault exactly") {
    const Mat34 m = reference_fixture();
    const FaultSignature sig = signature_from_matrix(m);
    const Vec3 b_tau = column(m, 0) * 0.2 + column(m, 1) * 0.5;
    const DoubleFaultFit fit = tfault_id_double(sig, b_tau);
    CHECK(fit.thruster1 == 0);
    CHECK(fit.thruster2 == 1);
    CHECK(fit.delta_w1 == Catch::Approx(0.2).margin(1e-12));
    CHECK(fit.delta_w2 == Catch::Approx(0.5).margin(1e-12));
    CHECK(fit.rmse < 1e-12);
}

TEST_CASE("pair identification nests the single model") {
    // When a pair fit is admissible it can only improve on the single fit.
    Rng rng(55);
    const FaultSignature sig = signature_from_matrix(reference_fixture());
    for (int trial = 0; trial < 2000; ++trial) {
        Vec4 dw{};
        const int i = static_cast<int>(rng.uniform(0.0, 4.0));
        int j = static_cast<int>(rng.uniform(0.0, 4.0));
        if (j == i) j = (j + 1) % 4;
        dw[static_cast<std::size_t>(i)] = rng.uniform(0.05, 0.9);
        dw[static_cast<std::size_t>(j)] = rng.uniform(0.05, 0.9);
        const Vec3 b_tau = sig.m_tau * dw;
        const SingleFaultFit single = tfault_id_single(sig, b_tau);
        const DoubleFaultFit pair = tfault_id_double(sig, b_tau);
        REQUIRE(pair.rmse <= single.rmse + 1e-12);
        REQUIRE(pair.rmse < 1e-9);
    }
}

TEST_CASE("exact recovery over random signatures and losses") {
    Rng rng(56);
    for (int trial = 0; trial < 10000; ++trial) {
        Vec3 tau_c;
        for (int i = 0; i < 3; ++i) {
            double v = rng.uniform(-15.0, 15.0);
            if (std::abs(v) < 1.0) v = std::copysign(1.0, v == 0.0 ? 1.0 : v);
            tau_c[i] = v;
        }
        const FaultSignature sig = build_signature(tau_c, kGeom);
        // skip signatures with a weak column: losses there are undetectable
        if (sig.any_weak()) continue;

        const int idx = static_cast<int>(rng.uniform(0.0, 4.0));
        const double dw = rng.uniform(0.02, 1.0);
        Vec4 losses{};
        losses[static_cast<std::size_t>(idx)] = dw;
        const SingleFaultFit fit = tfault_id_single(sig, sig.m_tau * losses);
        REQUIRE(fit.thruster == idx);
        REQUIRE(fit.rmse < 1e-9);
        REQUIRE(std::abs(fit.delta_w - dw) < 1e-9);
    }
}

TEST_CASE("pair exact recovery over random signatures") {
    Rng rng(57);
    for (int trial = 0; trial < 10000; ++trial) {
        Vec3 tau_c;
        for (int i = 0; i < 3; ++i) {
            double v = rng.uniform(-15.0, 15.0);
            if (std::abs(v) < 1.0) v = std::copysign(1.0, v == 0.0 ? 1.0 : v);
            tau_c[i] = v;
        }
        const FaultSignature sig = build_signature(tau_c, kGeom);
        if (sig.any_weak()) continue;

        const int i = static_cast<int>(rng.uniform(0.0, 4.0));
        int j = static_cast<int>(rng.uniform(0.0, 4.0));
        if (j == i) j = (j + 1) % 4;
        Vec4 losses{};
        losses[static_cast<std::size_t>(i)] = rng.uniform(0.05, 1.0);
        losses[static_cast<std::size_t>(j)] = rng.uniform(0.05, 1.0);
        const DoubleFaultFit fit = tfault_id_double(sig, sig.m_tau * losses);
        const int lo = std::min(i, j), hi = std::max(i, j);
        REQUIRE(fit.thruster1 == lo);
        REQUIRE(fit.thruster2 == hi);
        REQUIRE(fit.rmse < 1e-9);
    }
}

TEST_CASE("three simultaneous faults do not fit any pair") {
    // strong, well-separated columns
    const FaultSignature sig = build_signature(vec3(30.0, -15.0, 1.0), kGeom);
    const Vec3 b_tau = sig.m_tau * vec4(0.3, 0.3, 0.3, 0.0);
    const DoubleFaultFit fit = tfault_id_double(sig, b_tau);
    CHECK(fit.rmse > 0.1);  // exceeds the published c4 criterion
}

TEST_CASE("identification is scale equivariant") {
    Rng rng(58);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec3 tau_c = vec3(rng.uniform(2, 15), rng.uniform(-15, -2), rng.uniform(1, 5));
        const FaultSignature sig1 = build_signature(tau_c, kGeom);
        const FaultSignature sig2 = build_signature(tau_c * 3.7, kGeom);
        Vec4 losses{};
        losses[1] = 0.4;
        const Vec3 b1 = sig1.m_tau * losses;
        const SingleFaultFit f1 = tfault_id_single(sig1, b1);
        const SingleFaultFit f2 = tfault_id_single(sig2, b1 * 3.7);
        CHECK(f1.thruster == f2.thruster);
        CHECK(f1.delta_w == Catch::Approx(f2.delta_w).margin(1e-12));
    }
}

TEST_CASE("degenerate pairs raise only when every pair is unusable") {
    Mat34 tiny{};
    for (double& v : tiny.a) v = 1e-160;
    const FaultSignature sig = signature_from_matrix(tiny);
    CHECK_THROWS_AS(tfault_id_double(sig, vec3(1, 0, 0)), numeric_error);
}

// --- supervisor state machine ---------------------------------------------

namespace {

FdiParams fast_params() {
    FdiParams p;
    p.arm_time = 0.0;
    p.t1 = 0.1;
    p.t2 = 0.2;
    p.t3 = 0.3;
    p.baseline_window = 0.05;
    p.deviation_window = 0.02;
    return p;
}

// Post-fault steady commanded wrench: the closed loop settles where the
// delivered wrench equals the pre-fault one, i.e. tau solves
// tau - M_tau(tau)*losses = tau_base. Solved by fixed-point iteration.
Vec3 post_fault_wrench(const Vec3& tau_base, const Vec4& losses) {
    const Mat34 t = build_tconf({deg2rad(45.0), 0.1888});
    const Mat43 tp = pinv(t);
    Vec3 tau = tau_base;
    for (int it = 0; it < 200; ++it) {
        const Vec4 f = tp * tau;
        Vec3 lost{};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t r = 0; r < 3; ++r) lost[r] += t(r, i) * f[i] * losses[i];
        tau = tau_base + lost;
    }
    return tau;
}

}  // namespace

TEST_CASE("supervisor one-shot detection, reconfiguration, and re-arm") {
    const double dt = 0.01;
    FdiSupervisor sup(fast_params(), kGeom, dt);
    ThrusterBank bank = ThrusterBank::make(kGeom, vec4(40, 40, 40, 40), 0.0);
    std::vector<FdiEvent> events;

    const Vec3 tau_base = vec3(10.0, -4.0, 0.5);
    const Vec3 quiet = Vec3{};

    // settle: below-threshold residual, constant wrench
    double t = 0.0;
    for (int i = 0; i < 20; ++i, t += dt) sup.update(t, quiet, tau_base, bank, events);
    CHECK(events.empty());
    CHECK(sup.armed());

    // fault on thruster 2: the commanded wrench settles where the delivered
    // wrench matches the pre-fault one
    const Vec3 tau_post = post_fault_wrench(tau_base, vec4(0.0, 0.4, 0.0, 0.0));
    const Vec3 bad_pose = vec3(0.05, 0.0, 0.0);

    sup.update(t, bad_pose, tau_post, bank, events);
    t += dt;
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == FdiEventKind::kDetected);
    CHECK(sup.fault_window_active());
    CHECK_FALSE(sup.armed());

    // pose recovers while the wrench drift persists; exceedances inside the
    // window (first few steps) must not re-trigger
    for (int i = 0; i < 31; ++i, t += dt)
        sup.update(t, i < 5 ? bad_pose : Vec3{}, tau_post, bank, events);

    bool saw_identified = false, saw_reconfigured = false, saw_rearmed = false;
    for (const auto& e : events) {
        if (e.kind == FdiEventKind::kIdentifiedSingle) {
            saw_identified = true;
            CHECK(e.detail.find("thruster=2") != std::string::npos);
        }
        if (e.kind == FdiEventKind::kReconfigured) saw_reconfigured = true;
        if (e.kind == FdiEventKind::kRearmed) saw_rearmed = true;
        REQUIRE(e.kind != FdiEventKind::kInconclusive);
    }
    CHECK(saw_identified);
    CHECK(saw_reconfigured);
    CHECK(saw_rearmed);
    CHECK(bank.weights_est[1] == Catch::Approx(0.6).margin(1e-6));

    // after T3 the supervisor is armed again and can latch a new fault
    CHECK(sup.armed());
    CHECK_FALSE(sup.fault_window_active());
    const std::size_t before = events.size();
    sup.update(t, bad_pose, tau_post, bank, events);
    REQUIRE(events.size() > before);
    CHECK(events[before].kind == FdiEventKind::kDetected);
}

TEST_CASE("supervisor reports inconclusive when nothing fits") {
    const double dt = 0.01;
    FdiParams params = fast_params();
    params.c3 = 1e-6;  // impossible criteria
    params.c4 = 1e-6;
    FdiSupervisor sup(params, kGeom, dt);
    ThrusterBank bank = ThrusterBank::make(kGeom, vec4(40, 40, 40, 40), 0.0);
    std::vector<FdiEvent> events;

    const Vec3 tau_base = vec3(10.0, -4.0, 0.5);
    double t = 0.0;
    for (int i = 0; i < 20; ++i, t += dt) sup.update(t, Vec3{}, tau_base, bank, events);
    // drift that is no clean column: noisy garbage
    Rng rng(4);
    for (int i = 0; i < 40; ++i, t += dt) {
        const Vec3 junk = tau_base + vec3(rng.normal(), rng.normal(), rng.normal());
        sup.update(t, vec3(0.05, 0, 0), junk, bank, events);
    }
    bool inconclusive = false, reconfig = false, rearmed = false;
    for (const auto& e : events) {
        if (e.kind == FdiEventKind::kInconclusive) inconclusive = true;
        if (e.kind == FdiEventKind::kReconfigured) reconfig = true;
        if (e.kind == FdiEventKind::kRearmed) rearmed = true;
    }
    CHECK(inconclusive);
    CHECK_FALSE(reconfig);
    CHECK(rearmed);
    CHECK(max_abs(bank.weights_est - vec4(1, 1, 1, 1)) == 0.0);
}

TEST_CASE("supervisor identifies a double fault") {
    const double dt = 0.01;
    FdiSupervisor sup(fast_params(), kGeom, dt);
    ThrusterBank bank = ThrusterBank::make(kGeom, vec4(40, 40, 40, 40), 0.0);
    std::vector<FdiEvent> events;

    const Vec3 tau_base = vec3(10.0, -4.0, 0.5);
    double t = 0.0;
    for (int i = 0; i < 20; ++i, t += dt) sup.update(t, Vec3{}, tau_base, bank, events);

    Vec4 losses{};
    losses[0] = 0.2;
    losses[2] = 0.5;
    const Vec3 tau_post = post_fault_wrench(tau_base, losses);
    for (int i = 0; i < 35; ++i, t += dt)
        sup.update(t, vec3(0.05, 0, 0), tau_post, bank, events);

    bool saw_double = false;
    for (const auto& e : events)
        if (e.kind == FdiEventKind::kIdentifiedDouble) {
            saw_double = true;
            CHECK(e.detail.find("thrusters=1,3") != std::string::npos);
        }
    CHECK(saw_double);
    CHECK(bank.weights_est[0] == Catch::Approx(0.8).margin(1e-6));
    CHECK(bank.weights_est[2] == Catch::Approx(0.5).margin(1e-6));
}

TEST_CASE("detection threshold boundary follows the published criterion") {
    const double dt = 0.01;
    FdiParams params = fast_params();
    FdiSupervisor sup(params, kGeom, dt);
    ThrusterBank bank = ThrusterBank::make(kGeom, vec4(40, 40, 40, 40), 0.0);
    std::vector<FdiEvent> events;

    // R = 0.004 < c2 = 0.005: no trigger
    sup.update(0.0, vec3(0.004, 0, 0), vec3(1, 1, 1), bank, events);
    CHECK(events.empty());
    // R = 0.006 > c2: trigger
    sup.update(0.01, vec3(0.006, 0, 0), vec3(1, 1, 1), bank, events);
    REQUIRE(events.size() >= 1);
    CHECK(events[0].kind == FdiEventKind::kDetected);
}
