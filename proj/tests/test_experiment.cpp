#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "csl/experiment.hpp"

using namespace csl;

TEST_CASE("derived seeds are deterministic and distinct") {
  CHECK(derive_seed(1, 2, kTrainStream) == derive_seed(1, 2, kTrainStream));
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0, 1, 12345})
    for (std::uint64_t index = 0; index < 50; ++index)
      for (std::uint64_t stream : {kTrainStream, kTestStream, kModelStream}) seen.insert(derive_seed(base, index, stream));
  CHECK(seen.size() == 3 * 50 * 3);
}

TEST_CASE("train and test splits are independent and reproducible") {
  const ConceptSchema schema = default_schema();
  const DataSplit a = make_split(schema, 7, 0, 30, 70);
  const DataSplit b = make_split(schema, 7, 0, 30, 70);
  const DataSplit c = make_split(schema, 7, 1, 30, 70);
  CHECK(a.train.size() == 100);
  CHECK(a.test.size() == 100);
  CHECK(a.train[5].tokens == b.train[5].tokens);
  CHECK(a.test[9].teacher == b.test[9].teacher);
  std::size_t same = 0;
  for (std::size_t i = 0; i < 100; ++i) same += a.train[i].tokens == a.test[i].tokens;
  CHECK(same < 20);
  std::size_t same_c = 0;
  for (std::size_t i = 0; i < 100; ++i) same_c += a.train[i].tokens == c.train[i].tokens;
  CHECK(same_c < 20);
  CHECK(sentence_overlap(a.train, a.test) < 0.5);
}

TEST_CASE("parallel_for visits every index once") {
  for (std::size_t jobs : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(hits.size(), jobs, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_NOTHROW(parallel_for(0, 4, [](std::size_t) {}));
  CHECK_THROWS(parallel_for(4, 2, [](std::size_t i) {
    if (i == 2) throw std::runtime_error("boom");
  }));
}

TEST_CASE("reusing a reservoir equals drawing it afresh") {
  const ConceptSchema schema = default_schema();
  const DataSplit data = make_split(schema, 3, 0, 20, 30);
  EsnConfig c;
  c.units = 40;
  c.seed = 11;
  const EsnModel reservoir = EsnModel::init(c, schema);
  const EsnRun fresh = run_esn(schema, data, c, LearningMode::Final);
  const EsnRun reused = run_esn(schema, data, c, LearningMode::Final, &reservoir);
  CHECK(fresh.model.w_out() == reused.model.w_out());
  CHECK(fresh.result.rates.exact == reused.result.rates.exact);
  CHECK(fresh.result.model == "esn-fl");
  CHECK(fresh.result.outputs.size() == 50);
  CHECK(fresh.result.seconds > 0.0);

  // rescaling the spectral radius of a reused reservoir
  EsnConfig r2 = c;
  r2.spectral_radius = 0.5;
  const EsnRun scaled = run_esn(schema, data, r2, LearningMode::Final, &reservoir);
  CHECK(spectral_radius(Eigen::MatrixXd(scaled.model.w_rec())) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(scaled.model.w_in() == reservoir.w_in());

  EsnConfig other = c;
  other.units = 41;
  CHECK_THROWS_AS(run_esn(schema, data, other, LearningMode::Final, &reservoir), std::invalid_argument);
}

TEST_CASE("runners report their models") {
  const ConceptSchema schema = default_schema();
  const DataSplit data = make_split(schema, 4, 0, 20, 30);
  LstmConfig lc;
  lc.units = 4;
  lc.epochs = 1;
  const LstmRun l = run_lstm(schema, data, lc);
  CHECK(l.result.model == "lstm4");
  CHECK(l.log.epochs.size() == 1);
  const RunResult b = run_baseline(schema, data);
  CHECK(b.model == "baseline");
  CHECK(b.rates.total() == 50);
  CHECK(b.rates.exact_error >= b.rates.valid_error);
}

TEST_CASE("rates split by object count") {
  const ConceptSchema schema = default_schema();
  const DataSplit data = make_split(schema, 5, 0, 20, 30);
  const RunResult b = run_baseline(schema, data);
  const ErrorRates one = error_rates_for(b.outputs, data.test, schema, 1);
  const ErrorRates two = error_rates_for(b.outputs, data.test, schema, 2);
  CHECK(one.total() == 20);
  CHECK(two.total() == 30);
  CHECK(one.not_valid + two.not_valid == b.rates.not_valid);
  CHECK(one.exact + two.exact == b.rates.exact);
}

TEST_CASE("hyperparameter cells") {
  CHECK(parse_hp_axis("leak_rate") == HpAxis::LeakRate);
  CHECK(parse_hp_axis("spectral_radius") == HpAxis::SpectralRadius);
  CHECK(std::string(to_string(HpAxis::SpectralRadius)) == "spectral_radius");
  CHECK_THROWS(parse_hp_axis("units"));

  const ConceptSchema schema = default_schema();
  const DataSplit data = make_split(schema, 6, 0, 20, 30);
  EsnConfig c;
  c.units = 30;
  const HpCell cell = run_hp_cell(schema, data, c, HpAxis::LeakRate, 0.5);
  CHECK(cell.run.model.config().leak_rate == 0.5);
  CHECK(cell.one_object_rates.total() == 20);
  double max_abs = 0.0;
  for (const auto& y : cell.run.result.outputs) max_abs = std::max(max_abs, y.cwiseAbs().maxCoeff());
  CHECK(cell.max_abs_output == max_abs);
}

TEST_CASE("histogram") {
  const std::vector<double> v = {0.0, 0.1, 0.5, 0.9, 1.0};
  const Histogram h = histogram(v, 2);
  CHECK(h.lo == 0.0);
  CHECK(h.hi == 1.0);
  CHECK(h.counts == std::vector<std::size_t>{2, 3});
  CHECK(histogram(std::vector<double>{2.0, 2.0}, 3).counts == std::vector<std::size_t>{2, 0, 0});
  CHECK(histogram(std::vector<double>{}, 4).counts.size() == 4);
  CHECK_THROWS(histogram(v, 0));
  CHECK(output_component({Eigen::Vector2d(1, 2), Eigen::Vector2d(3, 4)}, 1) == std::vector<double>{2.0, 4.0});
}

TEST_CASE("breakpoint rule") {
  auto curve = [](std::initializer_list<double> errs) {
    LearningCurve c;
    std::size_t t = 0;
    for (double e : errs) c.emplace_back(t, e), t += 10;
    return c;
  };
  // plateau at 0.7 until 300, then a drop to 0.2 within 50
  LearningCurve c;
  for (std::size_t t = 0; t <= 600; t += 10) c.emplace_back(t, t <= 300 ? 0.7 : (t <= 330 ? 0.5 : 0.2));
  CHECK(find_breakpoint(c) == 290u);  // 290 -> 330 = 0.2 below, within 50
  // a slow decline never drops 0.3 within the window
  LearningCurve slow;
  for (std::size_t t = 0; t <= 1000; t += 10) slow.emplace_back(t, 0.9 - 0.0008 * static_cast<double>(t));
  CHECK_FALSE(find_breakpoint(slow));
  // starting at 1.0 and settling at 0.7 is not a breakpoint
  CHECK_FALSE(find_breakpoint(curve({1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.7, 0.7, 0.7, 0.7, 0.7, 0.7})));
  // no plateau: already low
  CHECK_FALSE(find_breakpoint(curve({0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.0})));
  // needs `window` sentences of history
  CHECK_FALSE(find_breakpoint(curve({0.8, 0.8, 0.1, 0.1})));
  // a shallow dip below the plateau is not a drop, but it restarts the plateau
  CHECK(find_breakpoint(curve({0.8, 0.8, 0.8, 0.8, 0.8, 0.8, 0.55, 0.8, 0.8, 0.8, 0.8, 0.8, 0.8, 0.1})) == 120u);
}

TEST_CASE("validation curve follows the readout") {
  const ConceptSchema schema = default_schema();
  const DataSplit data = make_split(schema, 8, 0, 30, 70);
  EsnConfig c;
  c.units = 60;
  EsnModel m = EsnModel::init(c, schema);
  EsnModel ref = m;
  const LearningCurve curve = validation_curve(m, data.train, LearningMode::Final, data.test, schema, 25);
  REQUIRE(curve.size() == 5);
  CHECK(curve[0].first == 0);
  CHECK(curve[0].second == 1.0);  // zero readout: nothing decoded
  CHECK(curve.back().first == 100);
  // the last point is the trained model's valid error
  train_esn(ref, data.train, LearningMode::Final);
  CHECK(curve.back().second == doctest::Approx(error_rates(final_outputs(ref, data.test), data.test, schema).valid_error));
}

TEST_CASE("small scaling run") {
  ScalingOptions o;
  o.models = {"esn", "baseline"};
  o.object_counts = {4, 6};
  o.seeds = 2;
  o.base_seed = 1;
  o.esn.units = 40;
  o.jobs = 2;
  std::size_t progress = 0;
  const auto cells = run_scaling(o, [&](const ScalingCell&) { ++progress; });
  CHECK(cells.size() == 8);
  CHECK(progress == 8);
  const auto [valid, exact] = scaling_mean(cells, "baseline", 6);
  CHECK(exact >= valid);
  std::ostringstream out;
  write_scaling_table(out, cells);
  const std::string text = out.str();
  CHECK(text.rfind("n_objects\tmodel\treplica\tvalid_error\texact_error\ttrain_seconds\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 9);

  // cells are reproducible regardless of thread count
  o.jobs = 1;
  const auto serial = run_scaling(o);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto it = std::find_if(serial.begin(), serial.end(), [&](const ScalingCell& s) {
      return s.model == cells[i].model && s.n_objects == cells[i].n_objects && s.replica == cells[i].replica;
    });
    REQUIRE(it != serial.end());
    CHECK(it->rates.exact == cells[i].rates.exact);
  }
  o.models = {"mystery"};
  CHECK_THROWS(run_scaling(o));
}
