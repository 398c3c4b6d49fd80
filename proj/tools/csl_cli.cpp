// csl: corpus generation, training, evaluation and analysis exports.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csl/analysis.hpp"
#include "csl/baseline.hpp"
#include "csl/checkpoint.hpp"
#include "csl/corpus.hpp"
#include "csl/dataset_io.hpp"
#include "csl/esn.hpp"
#include "csl/eval.hpp"
#include "csl/experiment.hpp"
#include "csl/lstm.hpp"
#include "csl/statedump.hpp"

namespace fs = std::filesystem;
using namespace csl;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

void add_esn_options(CLI::App* cmd, EsnConfig& c) {
  cmd->add_option("--units", c.units, "Reservoir units")->capture_default_str();
  cmd->add_option("--spectral-radius", c.spectral_radius)->capture_default_str();
  cmd->add_option("--leak-rate", c.leak_rate)->capture_default_str();
  cmd->add_option("--sparsity", c.sparsity, "Fraction of zero recurrent weights")->capture_default_str();
  cmd->add_option("--regularization", c.regularization, "P(0) = I / regularization")->capture_default_str();
  cmd->add_option("--input-scaling", c.input_scaling)->capture_default_str();
}

struct TrainArgs {
  std::string model = "esn-fl";
  std::string train_path, out_path, log_path;
  std::uint64_t seed = 0;
  EsnConfig esn;
  std::optional<std::size_t> units, epochs, batch;
  std::optional<double> dropout, step_size;
  bool no_reset = false;
};

LstmConfig lstm_config(const TrainArgs& a) {
  LstmConfig c;
  if (a.model == "lstm20")
    c = LstmConfig::small();
  else if (a.model == "lstm40")
    c = LstmConfig::medium();
  else if (a.model == "lstm80")
    c = LstmConfig::large();
  else
    throw std::invalid_argument("unknown model '" + a.model + "'");
  if (a.units) c.units = *a.units;
  if (a.epochs) c.epochs = *a.epochs;
  if (a.batch) c.batch_size = *a.batch;
  if (a.dropout) c.dropout = *a.dropout;
  if (a.step_size) c.adam.step_size = *a.step_size;
  c.seed = a.seed;
  return c;
}

int cmd_train(const TrainArgs& a) {
  const Dataset data = load_dataset(a.train_path);
  if (a.model == "esn-fl" || a.model == "esn-cl") {
    EsnConfig c = a.esn;
    c.seed = a.seed;
    EsnModel model = EsnModel::init(c, data.schema);
    EsnTrainOptions options;
    options.reset_between_sentences = !a.no_reset;
    const auto mode = a.model == "esn-fl" ? LearningMode::Final : LearningMode::Continuous;
    const EsnTrainingLog log = train_esn(model, data.samples, mode, options);
    save_checkpoint(a.out_path, model, data.schema);
    if (!a.log_path.empty()) {
      auto out = open_out(a.log_path);
      out << "sentence\tmse\n";
      for (std::size_t k = 0; k < log.sentence_errors.size(); ++k) out << k + 1 << '\t' << log.sentence_errors[k] << '\n';
    }
    std::cout << a.model << ": " << log.updates << " updates in " << log.seconds << " s\n";
    return 0;
  }
  const LstmConfig c = lstm_config(a);
  LstmModel model = LstmModel::init(c, data.schema);
  const LstmTrainingLog log = train_lstm(model, data.samples, c);
  save_checkpoint(a.out_path, model, data.schema);
  if (!a.log_path.empty()) {
    auto out = open_out(a.log_path);
    out << "epoch\ttrain_loss\n";
    for (const auto& e : log.epochs) out << e.epoch << '\t' << e.train_loss << '\n';
  }
  std::cout << a.model << ": " << c.epochs << " epochs in " << log.seconds << " s\n";
  return 0;
}

struct LoadedModel {
  std::string arch;
  std::optional<EsnCheckpoint> esn;
  std::optional<LstmCheckpoint> lstm;

  const ConceptSchema& schema() const { return esn ? esn->schema : lstm->schema; }
  std::vector<Eigen::VectorXd> outputs(const std::vector<Sample>& samples) const {
    return esn ? final_outputs(esn->model, samples) : final_outputs(lstm->model, samples);
  }
  std::vector<SentenceTrace> traces(const std::vector<Sample>& samples) const {
    return esn ? capture_traces(esn->model, samples) : capture_traces(lstm->model, samples);
  }
};

LoadedModel load_model(const std::string& path) {
  LoadedModel m;
  m.arch = checkpoint_architecture(path);
  if (m.arch == "esn")
    m.esn = load_esn_checkpoint(path);
  else if (m.arch == "lstm")
    m.lstm = load_lstm_checkpoint(path);
  else
    throw std::runtime_error("unknown architecture '" + m.arch + "' in " + path);
  return m;
}

Dataset load_matching(const std::string& path, const ConceptSchema& schema) {
  Dataset d = load_dataset(path);
  if (!(d.schema == schema)) throw std::runtime_error("dataset schema does not match the checkpoint schema");
  return d;
}

void write_trace(std::ostream& out, const SentenceTrace& tr, const ConceptSchema& schema, bool with_cells = false) {
  out << "position\ttoken";
  for (std::size_t k = 0; k < schema.output_dim(); ++k) out << '\t' << schema.output_label(k);
  if (with_cells)
    for (Eigen::Index k = 0; k < tr.cells.front().size(); ++k) out << "\tcell" << k;
  out << '\n';
  for (std::size_t t = 0; t < tr.size(); ++t) {
    out << t << '\t' << schema.word(tr.tokens[t]);
    for (Eigen::Index k = 0; k < tr.outputs[t].size(); ++k) out << '\t' << tr.outputs[t](k);
    if (with_cells)
      for (Eigen::Index k = 0; k < tr.cells[t].size(); ++k) out << '\t' << tr.cells[t](k);
    out << '\n';
  }
}

std::size_t output_index(const ConceptSchema& schema, const std::string& label) {
  for (std::size_t k = 0; k < schema.output_dim(); ++k)
    if (schema.output_label(k) == label) return k;
  try {
    std::size_t used = 0;
    const auto k = std::stoul(label, &used);
    if (used == label.size() && k < schema.output_dim()) return k;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("unknown output '" + label + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-situational learning benchmark: ESN and LSTM"};
  std::string sampling_name = "uniform-sentence";
  auto add_sampling = [&](CLI::App* cmd) {
    cmd->add_option("--sampling", sampling_name, "Clause sampling: uniform-sentence or per-choice")
        ->check(CLI::IsMember({"uniform-sentence", "per-choice"}))
        ->capture_default_str();
  };
  app.set_config("--config", "", "INI file with [subcommand] sections");
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a dataset file");
  std::uint64_t gen_seed = 0;
  std::size_t gen_objects = 4, gen_one = 300, gen_two = 700;
  std::string gen_out;
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--objects", gen_objects, "Number of object categories")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--one", gen_one, "One-object sentences")->capture_default_str();
  gen->add_option("--two", gen_two, "Two-object sentences")->capture_default_str();
  gen->add_option("-o,--out", gen_out)->required();
  add_sampling(gen);

  // train
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  TrainArgs ta;
  train->add_option("--model", ta.model)
      ->check(CLI::IsMember({"esn-fl", "esn-cl", "lstm20", "lstm40", "lstm80"}))
      ->capture_default_str();
  train->add_option("--train", ta.train_path, "Training dataset")->required()->check(CLI::ExistingFile);
  train->add_option("-o,--out", ta.out_path, "Checkpoint path")->required();
  train->add_option("--log", ta.log_path, "Per-sentence or per-epoch log (TSV)");
  train->add_option("--seed", ta.seed)->capture_default_str();
  add_esn_options(train, ta.esn);
  train->add_flag("--no-reset", ta.no_reset, "Keep the reservoir state between sentences");
  train->add_option("--lstm-units", ta.units);
  train->add_option("--epochs", ta.epochs);
  train->add_option("--batch-size", ta.batch);
  train->add_option("--dropout", ta.dropout);
  train->add_option("--step-size", ta.step_size);

  // eval
  auto* ev = app.add_subcommand("eval", "Valid/exact errors of a checkpoint");
  std::string ev_ckpt, ev_data, ev_report;
  double ev_factor = 1.3;
  std::vector<double> ev_sweep;
  ev->add_option("--checkpoint", ev_ckpt)->required()->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data)->required()->check(CLI::ExistingFile);
  ev->add_option("--factor", ev_factor, "Threshold factor")->capture_default_str();
  ev->add_option("--sweep", ev_sweep, "first last step: threshold sweep instead of a single factor")
      ->expected(3);
  ev->add_option("--report", ev_report, "TSV report path");

  // scaling
  auto* sc = app.add_subcommand("scaling", "Error versus number of object categories");
  ScalingOptions so;
  bool sc_replicate = false;
  std::string sc_out;
  sc->add_option("--models", so.models)->capture_default_str();
  sc->add_option("--objects", so.object_counts)->capture_default_str();
  sc->add_option("--seeds", so.seeds, "Replicas per cell")->capture_default_str();
  sc->add_flag("--replicate", sc_replicate, "Five replicas per cell");
  sc->add_option("--seed", so.base_seed)->capture_default_str();
  sc->add_option("--jobs", so.jobs)->capture_default_str();
  add_esn_options(sc, so.esn);
  add_sampling(sc);
  sc->add_option("-o,--out", sc_out, "Results table (TSV)")->required();

  // hp-grid
  auto* hp = app.add_subcommand("hp-grid", "Deviate one reservoir hyperparameter");
  std::string hp_axis = "leak_rate", hp_dir;
  std::vector<double> hp_values;
  std::uint64_t hp_seed = 0;
  std::string hp_output = "right_position_obj1";
  EsnConfig hp_base;
  hp->add_option("--axis", hp_axis)->check(CLI::IsMember({"leak_rate", "spectral_radius"}))->capture_default_str();
  hp->add_option("--values", hp_values)->required();
  hp->add_option("--seed", hp_seed)->capture_default_str();
  hp->add_option("--output", hp_output, "Output whose activation histogram is written")->capture_default_str();
  add_esn_options(hp, hp_base);
  add_sampling(hp);
  hp->add_option("-o,--out-dir", hp_dir)->required();

  // export
  auto* ex = app.add_subcommand("export", "Write recurrent-state dumps");
  std::string ex_ckpt, ex_data, ex_out, ex_train, ex_snap_out, ex_mode = "cl";
  bool ex_keep_duplicates = false;
  std::optional<double> ex_tol;
  std::uint64_t ex_corpus_seed = 0;
  std::size_t ex_every = 0;
  ex->add_option("--checkpoint", ex_ckpt)->required()->check(CLI::ExistingFile);
  ex->add_option("--data", ex_data, "Corpus to run")->required()->check(CLI::ExistingFile);
  ex->add_option("-o,--out", ex_out, "Dump path")->required();
  ex->add_flag("--keep-duplicates", ex_keep_duplicates, "Do not drop repeated states");
  ex->add_option("--tolerance", ex_tol, "Approximate dedupe quantum");
  ex->add_option("--corpus-seed", ex_corpus_seed, "Recorded in the dump header");
  ex->add_option("--snapshot-every", ex_every, "ESN: retrain the readout and record outputs every N sentences");
  ex->add_option("--snapshot-train", ex_train, "Training set for the snapshot series");
  ex->add_option("--snapshot-mode", ex_mode)->check(CLI::IsMember({"fl", "cl"}))->capture_default_str();
  ex->add_option("--snapshot-out", ex_snap_out, "Snapshot series path");

  // analyze
  auto* an = app.add_subcommand("analyze", "Unit-level statistics");
  std::string an_ckpt, an_data, an_what = "variation", an_out, an_output = "glass_object_obj1";
  std::size_t an_k = 10, an_sentence = 0;
  bool an_cells = false;
  an->add_option("--checkpoint", an_ckpt)->required()->check(CLI::ExistingFile);
  an->add_option("--data", an_data)->check(CLI::ExistingFile);
  an->add_option("--what", an_what)
      ->check(CLI::IsMember({"variation", "top-units", "multipurpose", "winglet", "swa", "trace"}))
      ->capture_default_str();
  an->add_option("--output", an_output, "Output label or index")->capture_default_str();
  an->add_option("-k", an_k, "Units to select (0 = all)")->capture_default_str();
  an->add_option("--sentence", an_sentence, "Sentence index for swa and trace")->capture_default_str();
  an->add_flag("--cells", an_cells, "LSTM: use the cell state instead of h");
  an->add_option("-o,--out", an_out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    const SentenceSampling sampling = parse_sentence_sampling(sampling_name);
    so.sampling = sampling;
    if (*gen) {
      Rng rng(gen_seed);
      const ConceptSchema schema = scaled_schema(gen_objects);
      const auto samples = build_dataset(schema, rng, gen_one, gen_two, sampling);
      save_dataset(gen_out, schema, samples);
      std::cout << samples.size() << " samples written to " << gen_out << '\n';
      return 0;
    }
    if (*train) return cmd_train(ta);

    if (*ev) {
      const LoadedModel m = load_model(ev_ckpt);
      const Dataset data = load_matching(ev_data, m.schema());
      const auto outputs = m.outputs(data.samples);
      std::vector<SweepRow> rows;
      if (!ev_sweep.empty()) {
        const auto factors = factor_grid(ev_sweep[0], ev_sweep[1], ev_sweep[2]);
        rows = threshold_sweep(outputs, data.samples, m.schema(), factors);
      } else {
        rows.push_back({ev_factor, error_rates(outputs, data.samples, m.schema(), {ev_factor})});
      }
      if (!ev_report.empty()) {
        auto out = open_out(ev_report);
        write_report(out, rows);
      } else {
        write_report(std::cout, rows);
      }
      return 0;
    }

    if (*sc) {
      if (sc_replicate) so.seeds = 5;
      auto out = open_out(sc_out);
      const auto cells = run_scaling(so, [](const ScalingCell& c) {
        std::cerr << c.n_objects << " objects, " << c.model << " #" << c.replica << ": valid "
                  << c.rates.valid_error << " exact " << c.rates.exact_error << '\n';
      });
      write_scaling_table(out, cells);
      return 0;
    }

    if (*hp) {
      const HpAxis axis = parse_hp_axis(hp_axis);
      fs::create_directories(hp_dir);
      const ConceptSchema schema = default_schema();
      const DataSplit data = make_split(schema, hp_seed, 0, 300, 700, sampling);
      hp_base.seed = derive_seed(hp_seed, 0, kModelStream);
      const std::size_t hist_output = output_index(schema, hp_output);
      const EsnModel reservoir = EsnModel::init(hp_base, schema);
      auto errors = open_out((fs::path(hp_dir) / "errors.tsv").string());
      errors << "axis\tvalue\tvalid_error\texact_error\tone_object_valid_error\ttwo_object_valid_error\tmax_abs_output\n";
      for (double v : hp_values) {
        const HpCell cell = run_hp_cell(schema, data, hp_base, axis, v, &reservoir);
        errors << hp_axis << '\t' << v << '\t' << cell.rates.valid_error << '\t' << cell.rates.exact_error << '\t'
               << cell.one_object_rates.valid_error << '\t' << cell.two_object_rates.valid_error << '\t'
               << cell.max_abs_output << '\n';
        std::ostringstream tag;
        tag << hp_axis << '_' << v;
        const fs::path stem = fs::path(hp_dir) / tag.str();

        const auto values = output_component(cell.run.result.outputs, hist_output);
        const Histogram h = histogram(values, 50);
        auto hist = open_out(stem.string() + "_histogram.tsv");
        hist << "bin_lo\tbin_hi\tcount\n";
        const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
        for (std::size_t b = 0; b < h.counts.size(); ++b)
          hist << h.lo + width * static_cast<double>(b) << '\t' << h.lo + width * static_cast<double>(b + 1) << '\t'
               << h.counts[b] << '\n';

        const auto it = std::find_if(data.test.begin(), data.test.end(),
                                     [](const Sample& s) { return s.object_count() == 2; });
        if (it != data.test.end()) {
          auto trace = open_out(stem.string() + "_trace.tsv");
          write_trace(trace, *cell.run.model.run_sentence(it->tokens, true).trace, schema);
        }
        std::vector<Sample> finals = data.test;
        // Final-state dump: rows with is_final set.
        StateDump dump = capture_dump(cell.run.model, finals, schema, false, hp_seed, tag.str());
        StateDump final_only = dump;
        final_only.sentence_id.clear();
        final_only.position.clear();
        final_only.token.clear();
        final_only.states.clear();
        final_only.outputs.clear();
        final_only.is_final.clear();
        for (std::size_t i = 0; i < dump.rows(); ++i) {
          if (!dump.is_final[i]) continue;
          final_only.sentence_id.push_back(dump.sentence_id[i]);
          final_only.position.push_back(dump.position[i]);
          final_only.token.push_back(dump.token[i]);
          final_only.states.insert(final_only.states.end(), dump.state_row(i), dump.state_row(i) + dump.state_dim);
          final_only.outputs.insert(final_only.outputs.end(), dump.output_row(i),
                                    dump.output_row(i) + dump.output_dim);
          final_only.is_final.push_back(1);
        }
        save_dump(stem.string() + "_final_states.rssdump", dedupe(final_only));
        std::cerr << hp_axis << " = " << v << ": valid " << cell.rates.valid_error << " exact "
                  << cell.rates.exact_error << '\n';
      }
      return 0;
    }

    if (*ex) {
      const LoadedModel m = load_model(ex_ckpt);
      const Dataset data = load_matching(ex_data, m.schema());
      StateDump dump = m.esn ? capture_dump(m.esn->model, data.samples, m.schema(), false, ex_corpus_seed)
                             : capture_dump(m.lstm->model, data.samples, m.schema(), false, ex_corpus_seed);
      if (!ex_keep_duplicates) dump = dedupe(dump, ex_tol);
      save_dump(ex_out, dump);
      std::cout << dump.rows() << " rows written to " << ex_out << '\n';
      if (ex_every > 0) {
        if (!m.esn) throw std::runtime_error("snapshot series need an ESN checkpoint");
        if (ex_train.empty() || ex_snap_out.empty())
          throw std::runtime_error("--snapshot-every needs --snapshot-train and --snapshot-out");
        const Dataset train_set = load_matching(ex_train, m.schema());
        const auto& src = m.esn->model;
        const auto n1 = static_cast<Eigen::Index>(src.units() + 1);
        EsnModel fresh = EsnModel::from_parts(src.config(), src.w_in(), src.w_rec(),
                                              Eigen::MatrixXd::Zero(src.w_out().rows(), n1),
                                              Eigen::MatrixXd::Identity(n1, n1) / src.config().regularization);
        const auto series = snapshot_series(fresh, train_set.samples,
                                            ex_mode == "fl" ? LearningMode::Final : LearningMode::Continuous,
                                            dump.state_matrix(), ex_every);
        std::ofstream out(ex_snap_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + ex_snap_out);
        write_snapshots(out, series);
        std::cout << series.size() << " snapshots written to " << ex_snap_out << '\n';
      }
      return 0;
    }

    if (*an) {
      const LoadedModel m = load_model(an_ckpt);
      const ConceptSchema& schema = m.schema();
      std::ofstream file;
      if (!an_out.empty()) file = open_out(an_out);
      std::ostream& out = an_out.empty() ? std::cout : file;

      if (an_what == "winglet" || an_what == "top-units" || an_what == "multipurpose") {
        if (!m.esn) throw std::runtime_error(an_what + " needs an ESN checkpoint");
        const auto& w_out = m.esn->model.w_out();
        if (an_what == "winglet") {
          const WingletCurve c = winglet_curve(w_out);
          out << "# top8_mass " << c.top8_mass << " fraction_for_28_mass " << c.fraction_for_28_mass << '\n';
          out << "output\tpositive_fraction\trank\tweight\n";
          for (std::size_t o = 0; o < c.sorted_weights.size(); ++o)
            for (Eigen::Index r = 0; r < c.sorted_weights[o].size(); ++r)
              out << schema.output_label(o) << '\t' << c.positive_fraction[o] << '\t' << r << '\t'
                  << c.sorted_weights[o](r) << '\n';
        } else if (an_what == "top-units") {
          const auto o = output_index(schema, an_output);
          out << "rank\tunit\tweight\n";
          const auto units = top_connected_units(w_out, o, an_k);
          for (std::size_t r = 0; r < units.size(); ++r)
            out << r << '\t' << units[r] << '\t' << w_out(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(units[r]) + 1) << '\n';
        } else {
          out << "unit\toutputs\n";
          for (const auto& [u, count] : multipurpose_units(w_out, 20, 5)) out << u << '\t' << count << '\n';
        }
        return 0;
      }

      if (an_data.empty()) throw std::runtime_error(an_what + " needs --data");
      const Dataset data = load_matching(an_data, schema);
      if (an_what == "variation") {
        std::vector<std::size_t> units;
        if (m.esn && an_k > 0)
          units = top_connected_units(m.esn->model.w_out(), output_index(schema, an_output), an_k);
        else
          units = all_units(m.esn ? m.esn->model.units() : m.lstm->model.units());
        const auto stats = unit_variation(m.traces(data.samples), units, schema,
                                          an_cells ? TraceSignal::Cell : TraceSignal::State);
        out << "word\tcount\tmean\tstddev\n";
        for (std::size_t t = 0; t < stats.per_word.size(); ++t)
          out << schema.word(static_cast<TokenId>(t)) << '\t' << stats.per_word[t].count << '\t'
              << stats.per_word[t].mean << '\t' << stats.per_word[t].stddev << '\n';
        out << "@semantic\t" << stats.semantic.count << '\t' << stats.semantic.mean << '\t' << stats.semantic.stddev << '\n';
        out << "@function\t" << stats.function.count << '\t' << stats.function.mean << '\t' << stats.function.stddev << '\n';
        return 0;
      }
      if (an_sentence >= data.samples.size()) throw std::out_of_range("sentence index out of range");
      const auto& tokens = data.samples[an_sentence].tokens;
      if (an_what == "trace") {
        const SentenceRun run = m.esn ? m.esn->model.run_sentence(tokens, true) : m.lstm->model.run_sentence(tokens, true);
        write_trace(out, *run.trace, schema, m.lstm.has_value());
        return 0;
      }
      const SwaProbe probe = m.esn ? swa_probe(m.esn->model, tokens, schema) : swa_probe(m.lstm->model, tokens, schema);
      out << "# original\n";
      write_trace(out, probe.original, schema);
      out << "# and_prefixed\n";
      write_trace(out, probe.and_prefixed, schema);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
