#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qre/detectors.hpp"
#include "qre/discriminators.hpp"
#include "qre/io.hpp"
#include "qre/parse.hpp"
#include "qre/streaming.hpp"

using namespace qre;

namespace {

std::string num(double x) { return format_real(x); }

double parse_double(const std::string& s, const std::string& what) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) throw std::invalid_argument(what + ": not a number: '" + s + "'");
  return v;
}

void with_output(const std::string& path, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    if (!std::cout) throw IoError("write to stdout failed");
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  write(f);
  f.flush();
  if (!f) throw IoError("write to '" + path + "' failed");
}

Signal load_signal(const std::string& path) { return path == "-" ? read_signal(std::cin) : ingest_signal(path); }
Table load_table(const std::string& path) { return path == "-" ? read_table(std::cin) : read_table_file(path); }

// "lo:hi" (integers) or a comma-separated list.
ScaleGrid parse_scales(const std::string& text) {
  ScaleGrid g;
  if (auto colon = text.find(':'); colon != std::string::npos) {
    double lo = parse_double(text.substr(0, colon), "--scales"), hi = parse_double(text.substr(colon + 1), "--scales");
    if (lo != std::floor(lo) || hi != std::floor(hi) || lo < 1 || hi < lo)
      throw std::invalid_argument("--scales: range needs integers 1 <= lo <= hi");
    g = ScaleGrid::range(static_cast<int>(lo), static_cast<int>(hi));
  } else {
    std::stringstream ss(text);
    for (std::string cell; std::getline(ss, cell, ',');) g.scales.push_back(parse_double(cell, "--scales"));
  }
  g.validate();
  return g;
}

struct WaveletOptions {
  std::string scales = "1:128";
  int order = 2;
  std::optional<double> sigma;  // default: the sample spacing

  void add(CLI::App* cmd) {
    cmd->add_option("--scales", scales, "scale grid, lo:hi or s1,s2,...")->capture_default_str();
    cmd->add_option("--order", order, "derivative order of the Gaussian")->capture_default_str();
    cmd->add_option("--sigma", sigma, "Gaussian width in seconds (default: sample spacing)");
  }
  WaveletSpec spec(const Signal& x) const {
    WaveletSpec s{order, sigma.value_or(x.dt())};
    s.validate();
    return s;
  }
  std::string describe(const WaveletSpec& s) const {
    return "scales=" + scales + " order=" + std::to_string(s.order) + " sigma=" + num(s.sigma);
  }
};

// --- generate --------------------------------------------------------------

struct GenerateCmd {
  SyntheticSpec spec;
  std::string output = "-", truth;

  GenerateCmd() { spec.gaps = {250, 250, 250, 250}; }

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("generate", "synthetic spike train with ground truth");
    cmd->add_option("--length", spec.length, "samples")->capture_default_str();
    cmd->add_option("--dt", spec.dt, "sample spacing in seconds")->capture_default_str();
    cmd->add_option("--first", spec.first, "sample of the first spike")->capture_default_str();
    cmd->add_option("--gaps", spec.gaps, "samples between consecutive spikes")->delimiter(',')->capture_default_str();
    cmd->add_option("--amplitudes", spec.amplitudes, "one amplitude, or one per spike")->delimiter(',')->capture_default_str();
    cmd->add_option("--width", spec.width, "spike sigma in samples")->capture_default_str();
    cmd->add_option("--noise", spec.noise, "uniform noise amplitude")->capture_default_str();
    cmd->add_option("--seed", spec.seed, "noise seed")->capture_default_str();
    cmd->add_option("-o,--output", output, "signal table (t,v)");
    cmd->add_option("--truth", truth, "also write spike centers as an annotation table");
    cmd->callback([this] { run(); });
  }

  void run() {
    auto syn = generate_synthetic(spec);
    std::string gaps;
    for (auto g : spec.gaps) gaps += (gaps.empty() ? "" : ",") + std::to_string(g);
    std::string amps;
    for (auto a : spec.amplitudes) amps += (amps.empty() ? "" : ",") + num(a);
    std::vector<std::string> header{"generate length=" + std::to_string(spec.length) + " dt=" + num(spec.dt) +
                                    " first=" + std::to_string(spec.first) + " gaps=" + gaps + " amplitudes=" + amps +
                                    " width=" + num(spec.width) + " noise=" + num(spec.noise) +
                                    " seed=" + std::to_string(spec.seed)};
    with_output(output, [&](std::ostream& out) { write_signal(out, syn.signal, header); });
    if (!truth.empty()) {
      PeakAnnotation a{"truth", syn.centers, {}};
      for (auto c : syn.centers) a.times.push_back(syn.signal.t[c]);
      with_output(truth, [&](std::ostream& out) { write_annotation(out, a, header); });
    }
  }
};

// --- cwt -------------------------------------------------------------------

struct CwtCmd {
  std::string input, output = "-";
  WaveletOptions wavelet;
  bool binary = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("cwt", "continuous wavelet transform magnitudes");
    cmd->add_option("-i,--input", input, "signal table (t,v), - for stdin")->required();
    cmd->add_option("-o,--output", output, "spectrogram output");
    wavelet.add(cmd);
    cmd->add_flag("--binary", binary, "little-endian binary dump instead of the s,t,w table");
    cmd->callback([this] { run(); });
  }

  void run() {
    Signal x = load_signal(input);
    ScaleGrid grid = parse_scales(wavelet.scales);
    WaveletSpec spec = wavelet.spec(x);
    auto sp = cwt(x, grid, spec);
    with_output(output, [&](std::ostream& out) {
      if (binary) return write_spectrogram_binary(out, sp);
      out << "# cwt " << wavelet.describe(spec) << " input=" << input << '\n';
      write_spectrogram_text(out, sp);
    });
  }
};

// --- detect ----------------------------------------------------------------

struct DetectCmd {
  std::string kind, input, output = "-", preset, threshold_out;
  WaveletOptions wavelet;
  WpmParams wpm;
  MdtParams mdt;
  std::int64_t blanking = 150;
  std::optional<std::int64_t> guard;  // default: boundary_guard at sbar
  CLI::App* cmd = nullptr;

  void add(CLI::App& app) {
    cmd = app.add_subcommand("detect", "peak detection: wpm, wpb or mdt");
    cmd->add_option("kind", kind, "detector")->required()->check(CLI::IsMember({"wpm", "wpb", "mdt"}));
    cmd->add_option("-i,--input", input, "signal table (t,v), - for stdin")->required();
    cmd->add_option("-o,--output", output, "annotation table");
    wavelet.add(cmd);
    cmd->add_option("--sbar", wpm.sbar, "analysis scale (must lie on the grid)")->capture_default_str();
    cmd->add_option("--pbar", wpm.pbar, "magnitude threshold at sbar")->capture_default_str();
    cmd->add_option("--eps", wpm.eps, "scale tolerance of maxima lines")->capture_default_str();
    cmd->add_option("--delta", wpm.delta, "time tolerance of maxima lines, samples")->capture_default_str();
    cmd->add_option("--bl", blanking, "blanking length, samples")->capture_default_str();
    cmd->add_option("--guard", guard, "boundary guard in samples (default: wavelet support at sbar)");
    cmd->add_option("--decay", mdt.decay, "threshold decay rate per sample")->capture_default_str();
    cmd->add_option("--pmin", mdt.min_threshold, "threshold floor")->capture_default_str();
    cmd->add_option("--init", mdt.initial_threshold, "initial threshold")->capture_default_str();
    cmd->add_option("--preset", preset, "parameter preset")->check(CLI::IsMember({"nominal-vt"}));
    cmd->add_option("--threshold", threshold_out, "mdt: also write the threshold trace (index,time,threshold)");
    cmd->callback([this] { run(); });
  }

  void apply_preset() {
    if (preset != "nominal-vt") return;
    if (!cmd->count("--sbar")) wpm.sbar = 80;
    if (!cmd->count("--pbar")) wpm.pbar = 400;
    if (!cmd->count("--bl")) blanking = 150;
  }

  void run() {
    apply_preset();
    Signal x = load_signal(input);
    std::vector<std::string> header;
    PeakAnnotation a;
    if (kind == "mdt") {
      mdt.blanking = blanking;
      auto r = detect_mdt(x, mdt);
      a = r.peaks;
      header.push_back("detect mdt bl=" + std::to_string(mdt.blanking) + " decay=" + num(mdt.decay) +
                       " pmin=" + num(mdt.min_threshold) + " init=" + num(mdt.initial_threshold) + " input=" + input);
      if (!threshold_out.empty())
        with_output(threshold_out, [&](std::ostream& out) {
          out << "# " << header[0] << "\nindex,time,threshold\n";
          for (std::size_t k = 0; k < r.threshold.size(); ++k) out << k << ',' << num(x.t[k]) << ',' << num(r.threshold[k]) << '\n';
        });
    } else {
      WaveletSpec spec = wavelet.spec(x);
      ScaleGrid grid = parse_scales(wavelet.scales);
      grid.index_of(wpm.sbar);
      // Scales above sbar never enter either detector.
      while (grid.scales.back() > wpm.sbar) grid.scales.pop_back();
      std::int64_t g = guard.value_or(boundary_guard(spec, wpm.sbar, x.dt()));
      auto sp = cwt(x, grid, spec);
      std::string common = " sbar=" + num(wpm.sbar) + " pbar=" + num(wpm.pbar);
      if (kind == "wpm") {
        wpm.guard = g;
        a = detect_wpm(sp, wpm);
        common += " eps=" + num(wpm.eps) + " delta=" + std::to_string(wpm.delta);
      } else {
        a = detect_wpb(sp, WpbParams{wpm.sbar, wpm.pbar, blanking, g});
        common += " bl=" + std::to_string(blanking);
      }
      header.push_back("detect " + kind + common + " guard=" + std::to_string(g) + " " + wavelet.describe(spec) +
                       " input=" + input);
    }
    with_output(output, [&](std::ostream& out) { write_annotation(out, a, header); });
  }
};

// --- discriminate ----------------------------------------------------------

struct DiscriminateCmd {
  std::string kind, input, output = "-";
  std::int64_t lo = 0, hi = 60;
  std::size_t window = 60;
  std::vector<std::size_t> bounds{0, 4, 0, 4, 0, 4, 0, 4};

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("discriminate", "windowed features over beat or chamber streams");
    cmd->add_option("kind", kind, "count|onset|rate|stability (t,beat input); pattern|compare (t,chamber input)")
        ->required()
        ->check(CLI::IsMember({"count", "onset", "rate", "stability", "pattern", "compare"}));
    cmd->add_option("-i,--input", input, "item table, - for stdin")->required();
    cmd->add_option("-o,--output", output, "feature table");
    cmd->add_option("--lo", lo, "count: lowest accepted beat count")->capture_default_str();
    cmd->add_option("--hi", hi, "count: highest accepted beat count")->capture_default_str();
    cmd->add_option("--window", window, "window length in items")->capture_default_str();
    cmd->add_option("--bounds", bounds, "pattern: a,b,c,d,e,f,g,h zero-run bounds")
        ->delimiter(',')
        ->expected(8)
        ->capture_default_str();
    cmd->callback([this] { run(); });
  }

  void run() {
    QrePtr q;
    std::string params;
    if (kind == "count") {
      q = qre_on_suffix(qre_count_in_range(lo, hi, window));
      params = " lo=" + std::to_string(lo) + " hi=" + std::to_string(hi) + " window=" + std::to_string(window);
    } else if (kind == "onset") {
      q = qre_after_beat(qre_sudden_onset());
    } else if (kind == "rate" || kind == "stability") {
      q = kind == "rate" ? qre_heart_rate(qre_last_beat(), window) : qre_stability(qre_last_beat(), window);
      params = " window=" + std::to_string(window);
    } else if (kind == "pattern") {
      std::array<std::size_t, 8> b{};
      std::copy(bounds.begin(), bounds.end(), b.begin());
      q = qre_on_suffix(qre_pattern(b));
      params = " bounds=";
      for (std::size_t k = 0; k < 8; ++k) params += (k ? "," : "") + std::to_string(b[k]);
    } else {
      q = qre_rate_compare(qre_heart_rate(qre_last_chamber("V"), window), qre_heart_rate(qre_last_chamber("A"), window));
      params = " window=" + std::to_string(window);
    }
    std::vector<double> times;
    auto items = read_items(load_table(input), *q->schema(), &times);
    StreamEvaluator ev(q);
    with_output(output, [&](std::ostream& out) {
      out << "# discriminate " << kind << params << " input=" << input << "\nindex,time,value\n";
      for (std::size_t k = 0; k < items.size(); ++k) {
        ev.step(items[k]);
        if (auto v = ev.output()) out << k << ',' << num(times[k]) << ',' << v->to_string() << '\n';
      }
    });
  }
};

// --- qre-eval --------------------------------------------------------------

struct EvalCmd {
  std::string schema = "x:real", expr, file, input, output = "-";
  std::vector<std::string> params;
  bool trace = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("qre-eval", "evaluate a QRE over an item table");
    cmd->add_option("--schema", schema, "item fields, e.g. v:real,beat:boolean")->capture_default_str();
    auto* e = cmd->add_option("--expr", expr, "expression text");
    auto* f = cmd->add_option("--file", file, "expression file");
    e->excludes(f);
    cmd->add_option("-i,--input", input, "table t,<fields>, - for stdin")->required();
    cmd->add_option("-o,--output", output, "result");
    cmd->add_option("--param", params, "name=value for a free parameter (repeatable)");
    cmd->add_flag("--trace", trace, "print the output after every item");
    cmd->callback([this] { run(); });
  }

  void run() {
    if (expr.empty() == file.empty()) throw std::invalid_argument("give exactly one of --expr and --file");
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw IoError("cannot open '" + file + "'");
      std::ostringstream ss;
      ss << in.rdbuf();
      expr = ss.str();
    }
    SchemaPtr s = parse_schema(schema);
    QrePtr q = parse_qre(s, expr);

    Valuation v;
    for (const auto& p : params) {
      auto eq = p.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--param expects name=value, got '" + p + "'");
      std::string name = p.substr(0, eq);
      const Parameter* decl = q->find_param(name);
      if (!decl) throw ConstructionError("params.unknown", "expression has no free parameter '" + name + "'");
      v[name] = parse_value(p.substr(eq + 1), decl->type);
    }
    for (const auto& decl : q->params())
      if (!v.count(decl.name))
        throw ConstructionError("params.missing", "no value for parameter '" + decl.name + "' (use --param)");

    std::vector<double> times;
    auto items = read_items(load_table(input), *s, &times);
    StreamEvaluator ev(q, v);
    with_output(output, [&](std::ostream& out) {
      auto show = [](const std::optional<Value>& x) { return x ? x->to_string() : std::string("undefined"); };
      if (trace) out << "index,time,value\n";
      for (std::size_t k = 0; k < items.size(); ++k) {
        ev.step(items[k]);
        if (trace) out << k << ',' << num(times[k]) << ',' << show(ev.output()) << '\n';
      }
      if (!trace) out << show(ev.output()) << '\n';
    });
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantitative regular expressions over signals: wavelet peak detection and rhythm features"};
  app.require_subcommand(1);
  GenerateCmd generate;
  CwtCmd cwt_cmd;
  DetectCmd detect;
  DiscriminateCmd discriminate;
  EvalCmd eval;
  generate.add(app);
  cwt_cmd.add(app);
  detect.add(app);
  discriminate.add(app);
  eval.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConstructionError& e) {
    std::cerr << "invalid expression: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
