# engine/manual_checks.py

from pprint import pprint

from engine.analysis import infidelity_stagger_analytic, infidelity_stagger_simulated
from engine.microwave_stage import effective_couplings, make_timing_plan
from engine.optical_stage import run_optical_stage
from engine.protocol import build_protocol_config, run_protocol
from utils.schema import MicrowaveParams, OpticalCavityParams, StaggerSpec, mhz_to_rad_per_us


def reference_cavity() -> OpticalCavityParams:
    h = mhz_to_rad_per_us(34.0)
    return OpticalCavityParams(
        h_R=h, h_L=h, gamma=mhz_to_rad_per_us(2.6), kappa=mhz_to_rad_per_us(4.1)
    )


def reference_microwave(n_atoms: int = 2) -> MicrowaveParams:
    g = mhz_to_rad_per_us(0.05)
    return MicrowaveParams(g=g, delta=5.0 * g, omega0=mhz_to_rad_per_us(2.0), n_atoms=n_atoms)


def check_optical():
    print("=== Optical stage at the reference point ===")
    r = run_optical_stage(reference_cavity())
    print(f"tau = {r.tau * 1e3:.3f} ns, P_j = {r.success_prob:.4f}, P = {r.success_prob ** 2:.4f}")


def check_timing():
    print("\n=== Microwave timing plans ===")
    mw = reference_microwave()
    lam = effective_couplings(mw.g, mw.delta).lam
    for n in (2, 3, 4):
        plan = make_timing_plan(lam, n, 50.0 * mw.g)
        print(f"N={n}: t0 = {plan.t0:.3f} us, n = {plan.n_branch}, G/g = {plan.G_required / mw.g:.2f}")


def check_outcomes(n_atoms: int):
    print(f"\n=== Outcome table, N={n_atoms} ===")
    cfg = build_protocol_config([reference_cavity()] * n_atoms, reference_microwave(n_atoms))
    result = run_protocol(cfg)
    for row in result.outcome_table:
        pprint((row.pattern, round(row.probability, 6), row.label, row.phase, round(row.fidelity, 10)))


def check_stagger():
    print("\n=== Two-atom stagger at dt = 0.01 t0 ===")
    mw = reference_microwave()
    lam = effective_couplings(mw.g, mw.delta).lam
    plan = make_timing_plan(lam, 2, 50.0 * mw.g)
    spec = StaggerSpec(delta_t=0.01 * plan.t0, t0=plan.t0, n_atoms=2, G=plan.G_required, lam=lam)
    print(f"analytic = {infidelity_stagger_analytic(spec):.6f}, simulated = {infidelity_stagger_simulated(spec):.6f}")


def main():
    check_optical()
    check_timing()
    check_outcomes(2)
    check_outcomes(3)
    check_stagger()


if __name__ == "__main__":
    main()
