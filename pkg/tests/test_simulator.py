"""Simulator tests: workload schedule, determinism, isolation, conservation."""

import math
from dataclasses import replace

import pytest

from reprtrace.errors import ParameterError
from reprtrace.model import PerformanceRecord, SamplerConfig
from reprtrace.scenario import default_scenario
from reprtrace.simulator import (
    AppModel,
    Burst,
    RequestTypeSpec,
    Seasonal,
    Simulation,
    Stationary,
    WorkloadSpec,
    run_scenario,
    users_at,
)
from reprtrace.strategies import Strategy, StrategyKind


def small_model(**overrides):
    types = (
        RequestTypeSpec("/a", weight=3, base_rt=40.0, rt_dispersion=0.2,
                        base_mem=100.0, mem_dispersion=0.2),
        RequestTypeSpec("/b", weight=2, base_rt=60.0, rt_dispersion=0.2,
                        base_mem=300.0, mem_dispersion=0.2),
        RequestTypeSpec("/c", weight=1, base_rt=80.0, rt_dispersion=0.3,
                        base_mem=500.0, mem_dispersion=0.3),
    )
    fields = dict(
        types=types, capacity_users=10.0, contention_gamma=0.5,
        trace_cost=15.0, gc_negative_prob=0.05,
    )
    fields.update(overrides)
    return AppModel(**fields)


def small_workload(duration=30):
    return WorkloadSpec(segments=(Stationary(users=4, duration=duration),))


class TestUsersAt:
    def test_stationary(self):
        spec = WorkloadSpec(segments=(Stationary(users=8, duration=60),))
        assert users_at(spec, 30.0) == 8

    def test_seasonal_peak(self):
        spec = WorkloadSpec(segments=(Seasonal(base_users=8, amplitude=12,
                                               period=60, duration=120),))
        assert users_at(spec, 15.0) == 20

    def test_seasonal_trough_clamps_at_base(self):
        spec = WorkloadSpec(segments=(Seasonal(base_users=8, amplitude=12,
                                               period=60, duration=120),))
        assert users_at(spec, 45.0) == 8

    def test_burst_peak_and_window(self):
        spec = WorkloadSpec(segments=(Burst(base_users=8, peak_users=20, at=10,
                                            width=2, duration=60),))
        assert users_at(spec, 10.0) == 20
        assert users_at(spec, 9.5) == 14
        assert users_at(spec, 12.0) == 8
        assert users_at(spec, 40.0) == 8

    def test_segments_chain(self):
        spec = WorkloadSpec(segments=(
            Stationary(users=3, duration=10),
            Stationary(users=7, duration=10),
        ))
        assert users_at(spec, 9.9) == 3
        assert users_at(spec, 10.0) == 7
        assert spec.total_duration == 20

    def test_beyond_schedule(self):
        spec = small_workload(duration=30)
        with pytest.raises(ParameterError):
            users_at(spec, 30.0)
        with pytest.raises(ParameterError):
            users_at(spec, -1.0)

    def test_segment_validation(self):
        with pytest.raises(ValueError):
            Stationary(users=0, duration=10)
        with pytest.raises(ValueError):
            Seasonal(base_users=8, amplitude=-1, period=60, duration=60)
        with pytest.raises(ValueError):
            Burst(base_users=8, peak_users=20, at=70, width=2, duration=60)
        with pytest.raises(ValueError):
            WorkloadSpec(segments=())


class TestDeterminism:
    def test_identical_runs(self):
        model = small_model()
        workload = small_workload()
        first = run_scenario(model, workload, "ADP", seed=7)
        second = run_scenario(model, workload, "ADP", seed=7)
        assert first.seconds == second.seconds
        assert len(first.events) == len(second.events)
        assert first.events == second.events
        assert len(first.traces) == len(second.traces)
        assert [r.cycle_index for r in first.releases] == [
            r.cycle_index for r in second.releases
        ]

    def test_seed_changes_stream(self):
        model = small_model()
        workload = small_workload()
        first = run_scenario(model, workload, "NOM", seed=1)
        second = run_scenario(model, workload, "NOM", seed=2)
        assert first.events != second.events


class TestStrategyIsolation:
    def test_zero_cost_nom_equals_fum(self):
        model = small_model(trace_cost=0.0)
        workload = small_workload()
        nom = run_scenario(model, workload, "NOM", seed=3)
        fum = run_scenario(model, workload, "FUM", seed=3)
        assert [s.throughput for s in nom.seconds] == [s.throughput for s in fum.seconds]
        assert nom.events == fum.events

    def test_offered_stream_identical_per_second(self):
        model = small_model()
        workload = small_workload()
        runs = {kind: run_scenario(model, workload, kind, seed=5)
                for kind in ["NOM", "FUM", "UNI", "INV", "ADP"]}

        def by_second(run):
            table = {}
            for event in run.events:
                table.setdefault(event.start // 1000, []).append(
                    (event.type_id, event.memory_delta))
            return table

        tables = {kind: by_second(run) for kind, run in runs.items()}
        reference = tables["NOM"]
        for kind, table in tables.items():
            for second, events in table.items():
                expected = reference[second][: len(events)]
                assert events == expected, f"{kind} diverged in second {second}"

    def test_monitoring_overhead_reduces_throughput(self):
        model = small_model(trace_cost=20.0)
        workload = small_workload(duration=40)
        nom = run_scenario(model, workload, "NOM", seed=11)
        fum = run_scenario(model, workload, "FUM", seed=11)
        nom_mean = sum(s.throughput for s in nom.seconds) / len(nom.seconds)
        fum_mean = sum(s.throughput for s in fum.seconds) / len(fum.seconds)
        assert fum_mean < nom_mean


class TestConservation:
    def test_event_count_matches_throughput(self):
        run = run_scenario(small_model(), small_workload(), "UNI", seed=9)
        assert len(run.events) == sum(s.throughput for s in run.seconds)

    def test_traces_reference_ground_truth(self):
        run = run_scenario(small_model(), small_workload(), "UNI", seed=9)
        ground = set(map(id, run.events))
        assert all(id(trace.event) in ground for trace in run.traces)
        assert len({id(t.event) for t in run.traces}) == len(run.traces)

    def test_nom_and_fum_trace_counts(self):
        nom = run_scenario(small_model(), small_workload(), "NOM", seed=4)
        fum = run_scenario(small_model(), small_workload(), "FUM", seed=4)
        assert nom.traces == []
        assert len(fum.traces) == len(fum.events)

    def test_negative_memory_sentinels_present(self):
        run = run_scenario(small_model(gc_negative_prob=0.2), small_workload(), "NOM", seed=6)
        negatives = [e for e in run.events if e.memory_delta < 0]
        assert negatives
        model = small_model(gc_negative_prob=0.0)
        clean = run_scenario(model, small_workload(), "NOM", seed=6)
        assert all(e.memory_delta >= 0 for e in clean.events)


class _CountingStrategy(Strategy):
    kind = StrategyKind.NOM

    def __init__(self):
        self.ticks = []

    def decide(self, request, now, rng):
        return False

    def on_tick(self, record, now):
        self.ticks.append((now, record.rps))

    @property
    def rate(self):
        return 0.0


class TestTicks:
    def test_one_tick_per_second(self):
        strategy = _CountingStrategy()
        sim = Simulation(small_model(), small_workload(duration=10), strategy,
                         SamplerConfig(), seed=1)
        sim.run()
        assert [t for t, _ in strategy.ticks] == [float(s) for s in range(1, 11)]

    def test_slower_cadence_aggregates(self):
        strategy = _CountingStrategy()
        sim = Simulation(small_model(), small_workload(duration=10), strategy,
                         SamplerConfig(adaptation_frequency=2.0), seed=1)
        result = sim.run()
        assert [t for t, _ in strategy.ticks] == [2.0, 4.0, 6.0, 8.0, 10.0]
        total = sum(s.throughput for s in result.seconds)
        # rps covers the whole two-second interval
        assert sum(rps * 2.0 for _, rps in strategy.ticks) == pytest.approx(total)

    def test_series_rates_for_fixed_strategies(self):
        run = run_scenario(small_model(), small_workload(), "UNI", seed=2)
        assert all(s.sampling_rate == 0.5 for s in run.seconds)
        run = run_scenario(small_model(), small_workload(), "FUM", seed=2)
        assert all(s.sampling_rate == 1.0 for s in run.seconds)
        run = run_scenario(small_model(), small_workload(), "NOM", seed=2)
        assert all(s.sampling_rate == 0.0 for s in run.seconds)
        assert all(s.monitoring_enabled is False for s in run.seconds)


class TestDefaultScenario:
    def test_validates_and_covers_segment_kinds(self):
        scenario = default_scenario()
        kinds = {type(seg) for seg in scenario.workload.segments}
        assert kinds == {Stationary, Seasonal, Burst}
        assert scenario.workload.total_duration == 600
        assert len(scenario.model.types) == 8

    def test_users_profile(self):
        scenario = default_scenario()
        profile = [users_at(scenario.workload, float(t)) for t in range(600)]
        assert min(profile) == 8
        assert max(profile) == 20

    def test_app_model_fields(self):
        model = default_scenario().model
        assert model.capacity_users < 20
        assert model.trace_cost > 0
        assert 0 <= model.gc_negative_prob < 1


class TestModelValidation:
    def test_duplicate_type_ids(self):
        spec = RequestTypeSpec("/a", weight=1, base_rt=10.0, rt_dispersion=0.1,
                               base_mem=10.0, mem_dispersion=0.1)
        with pytest.raises(ValueError):
            AppModel(types=(spec, spec), capacity_users=10, contention_gamma=0.5,
                     trace_cost=1.0, gc_negative_prob=0.0)

    def test_field_bounds(self):
        base = small_model()
        with pytest.raises(ValueError):
            replace(base, capacity_users=0.0)
        with pytest.raises(ValueError):
            replace(base, contention_gamma=-1.0)
        with pytest.raises(ValueError):
            replace(base, gc_negative_prob=1.0)
        with pytest.raises(ValueError):
            replace(base, trace_io_capacity=0.0)
        with pytest.raises(ValueError):
            replace(base, trace_contention=-0.1)

    def test_io_capacity_default_is_inert(self):
        assert math.isinf(small_model().trace_io_capacity)
