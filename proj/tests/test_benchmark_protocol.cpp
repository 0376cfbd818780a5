#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rewardloop/benchmark.hpp"
#include "rewardloop/protocol.hpp"
#include "rewardloop/random.hpp"
#include "rewardloop/report.hpp"
#include "support/protocol_checks.hpp"

using namespace rewardloop;

namespace {

ExperimentConfig quick_config(std::uint64_t seed = 0) {
  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.sampler.num_particles = 4;
  cfg.schedule.steps = 20;
  cfg.budget = {3, 3, 2};
  cfg.benchmark.num_sessions = 2;
  cfg.benchmark.confusable_pairs = {{8, 3}};
  return cfg;
}

}  // namespace

TEST_SUITE("benchmark") {
  TEST_CASE("default stream shape") {
    const Dataset d = make_benchmark(BenchmarkSpec{});
    REQUIRE(d.sessions.size() == 5);
    CHECK(d.sessions[0].classes == std::vector<int>{0, 1, 2, 3, 4, 5});
    CHECK(d.sessions[0].train.size() == 600);
    for (std::size_t s = 1; s < 5; ++s) {
      CHECK(d.sessions[s].train.size() == 10);
      CHECK(d.sessions[s].classes.size() == 2);
      CHECK(d.sessions[s].classes.front() == 6 + 2 * static_cast<int>(s - 1));
    }
    CHECK(d.eval.size() == 14 * 40);
    CHECK(d.prior.class_ids().size() == 14);
    CHECK(eval_subset(d, {0, 7}).size() == 80);
  }

  TEST_CASE("class geometry follows the requested cosines") {
    const BenchmarkSpec spec;
    const Dataset d = make_benchmark(spec);
    for (int a = 0; a < 14; ++a) {
      CHECK(d.true_means[static_cast<std::size_t>(a)].norm() == doctest::Approx(spec.mean_norm).epsilon(1e-9));
      for (int b = a + 1; b < 14; ++b) {
        const bool confusable = (a == 3 && b == 8) || (a == 10 && b == 11);
        const double want = confusable ? spec.confusable_cos : spec.base_cos;
        CHECK(cosine_sim(d.true_means[static_cast<std::size_t>(a)], d.true_means[static_cast<std::size_t>(b)]) ==
              doctest::Approx(want).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("same seed, same data; new seed, new data") {
    BenchmarkSpec spec;
    spec.seed = 9;
    const Dataset a = make_benchmark(spec), b = make_benchmark(spec);
    CHECK(a.sessions[1].train[0].x == b.sessions[1].train[0].x);
    CHECK(a.eval.back().x == b.eval.back().x);
    spec.seed = 10;
    CHECK(make_benchmark(spec).sessions[1].train[0].x != a.sessions[1].train[0].x);
  }

  TEST_CASE("invalid specs") {
    BenchmarkSpec s;
    s.shot = 0;
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = BenchmarkSpec{};
    s.confusable_pairs = {{0, 99}};
    CHECK_THROWS_AS(s.validate(), ParameterError);
    s = BenchmarkSpec{};
    s.dim = 8;
    CHECK_THROWS_AS(s.validate(), ParameterError);
  }

  TEST_CASE("prior text round trip") {
    const Dataset d = make_benchmark(BenchmarkSpec{});
    const std::string text = prior_to_config_text(d.prior);
    std::size_t lines = 0;
    for (char ch : text) lines += ch == '\n';
    CHECK(lines == 14);
    const std::string first = text.substr(text.find('=') + 2, text.find('\n') - text.find('=') - 2);
    const auto comps = parse_prior_components(first);
    const auto& orig = d.prior.components(0);
    REQUIRE(comps.size() == orig.size());
    for (std::size_t k = 0; k < comps.size(); ++k) {
      CHECK(comps[k].weight == orig[k].weight);
      CHECK(comps[k].var == orig[k].var);
      CHECK(comps[k].mean == orig[k].mean);
    }
    CHECK_THROWS_AS(parse_prior_components("1|2"), ParameterError);
    CHECK_THROWS_AS(parse_prior_components("1|x|0,0"), ParameterError);
  }
}

TEST_SUITE("protocol") {
  TEST_CASE("full run replays the expected step order with rewards per class type") {
    ExperimentConfig cfg;
    cfg.trace_rewards = true;
    MutualBoostingLoop loop(cfg);
    loop.run_all();
    const auto problems = protocol_checks::fidelity_problems(cfg, loop.dataset(), loop.report());
    for (const auto& p : problems) MESSAGE(p);
    CHECK(problems.empty());
    CHECK_FALSE(loop.report().reward_trace.empty());

    int reward_sets = 0;
    for (const auto& e : loop.report().events) {
      if (e.step != "reward_set") continue;
      ++reward_sets;
      if (e.detail.find("type=new") == 0) CHECK(e.detail == "type=new rewards=pammd+vm+rc");
      else CHECK((e.detail == "type=old rewards=pammd+vm+csca" || e.detail == "type=base rewards=pammd+vm+csca"));
    }
    CHECK(reward_sets == 1 + 2 * 4);
  }

  TEST_CASE("retained pools match the budgets per class type") {
    ExperimentConfig cfg = quick_config();
    MutualBoostingLoop loop(cfg);
    loop.run_all();
    const auto& pools = loop.state().generated_pools;
    for (int c = 0; c < 6; ++c) CHECK(pools.at(c).size() == 3u + 2u * 2u);
    CHECK(pools.at(6).size() == 3u + 2u);
    CHECK(pools.at(8).size() == 3u);
    CHECK(protocol_checks::fidelity_problems(cfg, loop.dataset(), loop.report()).empty());
  }

  TEST_CASE("old-class real data never enters incremental batches") {
    ExperimentConfig cfg = quick_config(3);
    MutualBoostingLoop loop(cfg);
    loop.run_all();
    const auto& batches = loop.report().batches;
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].real_items == 600);
    for (std::size_t s = 1; s < 3; ++s) {
      CHECK(batches[s].real_items == 10);
      CHECK(batches[s].real_classes == loop.dataset().sessions[s].classes);
      CHECK(batches[s].generated_items == 2u * 3u + (6u + 2u * (s - 1)) * 2u);
    }
  }

  TEST_CASE("seen classes grow by the way and history grows by one per session") {
    MutualBoostingLoop loop(quick_config());
    loop.run_base_session();
    CHECK(loop.state().seen_classes.size() == 6);
    CHECK(loop.state().accuracy_history.size() == 1);
    for (int t = 1; t <= 2; ++t) {
      loop.run_incremental_session();
      CHECK(loop.state().seen_classes.size() == 6u + 2u * static_cast<unsigned>(t));
      CHECK(loop.state().accuracy_history.size() == static_cast<std::size_t>(t + 1));
    }
    CHECK_THROWS_AS(loop.run_incremental_session(), ParameterError);
    CHECK_THROWS_AS(loop.run_base_session(), ParameterError);
  }

  TEST_CASE("null budgets reduce to prototype-init training") {
    ExperimentConfig cfg = quick_config();
    cfg.budget = {0, 0, 0};
    MutualBoostingLoop loop(cfg);
    loop.run_base_session();
    const ClassifierState after_base = loop.state().classifier;
    loop.run_incremental_session();
    const RunReport& r = loop.report();
    CHECK(r.generation.empty());
    for (int c = 0; c < 6; ++c) CHECK(loop.state().classifier.prototype(c).mu == after_base.prototype(c).mu);
    for (const auto& s : r.sessions) {
      CHECK(s.accuracy >= 0.0);
      CHECK(s.accuracy <= 100.0);
    }
  }

  TEST_CASE("average accuracy is the mean of the session column") {
    const RunReport r = mutual_boosting_run(quick_config(5));
    REQUIRE(r.sessions.size() == 3);
    double sum = 0.0;
    for (const auto& s : r.sessions) sum += s.accuracy;
    CHECK(r.average_accuracy == doctest::Approx(sum / 3.0).epsilon(1e-12));
    CHECK(r.sessions.back().average_accuracy == r.average_accuracy);
  }

  TEST_CASE("a run is a pure function of config and seed") {
    const RunReport a = mutual_boosting_run(quick_config(11));
    const RunReport b = mutual_boosting_run(quick_config(11));
    CHECK(results_csv(a) == results_csv(b));
    CHECK(generation_jsonl(a) == generation_jsonl(b));
    CHECK(events_log(a) == events_log(b));
    const RunReport c = mutual_boosting_run(quick_config(12));
    CHECK(generation_jsonl(c) != generation_jsonl(a));
  }

  TEST_CASE("disabling rewards removes their components") {
    ExperimentConfig cfg = quick_config();
    cfg.rewards.enabled = {true, false, true, false};
    const RunReport r = mutual_boosting_run(cfg);
    for (const auto& g : r.generation) {
      for (const auto& c : g.components) {
        CHECK(c.name != "vm");
        CHECK(c.name != "csca");
      }
    }
    CHECK(protocol_checks::fidelity_problems(cfg, make_benchmark([&] {
                                               BenchmarkSpec s = cfg.benchmark;
                                               s.seed = derive_seed(cfg.seed, {1});
                                               return s;
                                             }()),
                                             r)
              .empty());
  }

  TEST_CASE("old classes use generated variance targets") {
    const RunReport r = mutual_boosting_run(quick_config());
    bool any_generated = false;
    for (const auto& g : r.generation) {
      if (g.type == ClassType::kOld) {
        CHECK(g.vm_reference == "generated");
        any_generated = true;
      } else {
        CHECK(g.vm_reference == "real");
      }
    }
    CHECK(any_generated);
    CHECK_FALSE(r.notes.empty());
  }

  TEST_CASE("invalid configs are rejected before running") {
    ExperimentConfig cfg;
    cfg.budget.n_old = -1;
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    CHECK_THROWS_AS(MutualBoostingLoop{cfg}, ParameterError);
  }
}
