#include <stdexcept>

#include <json.hpp>

#include "imucaps/game.hpp"
#include "text_io.hpp"

namespace imucaps {

using nlohmann::json;

namespace {

void write_indexed(const std::vector<std::size_t>& values, const std::string& column,
                   const std::filesystem::path& path) {
  auto out = text::open_for_write(path);
  out << "sample_index," << column << '\n';
  for (std::size_t j = 0; j < values.size(); ++j) out << j << ',' << values[j] << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

json report_json(const GameReport& r) {
  return {{"name", r.name},
          {"players", {r.player_a, r.player_b}},
          {"samples", r.outcome.samples.size()},
          {"wins", {r.outcome.wins_a, r.outcome.wins_b}},
          {"draws", r.outcome.draws},
          {"best_response", {r.best_response_a, r.best_response_b}},
          {"nash", {r.best_response_a, r.best_response_b}}};
}

void write_json(const json& doc, const std::filesystem::path& path) {
  auto out = text::open_for_write(path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void write_predictions_csv(const std::vector<std::size_t>& predictions, const std::filesystem::path& path) {
  write_indexed(predictions, "predicted_class", path);
}

void write_truth_csv(const std::vector<std::size_t>& truth, const std::filesystem::path& path) {
  write_indexed(truth, "true_class", path);
}

std::vector<std::size_t> read_predictions_csv(const std::filesystem::path& path) {
  auto in = text::open_for_read(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto header = text::split(text::trim(line));
  if (header.size() != 2 || text::trim(header[0]) != "sample_index") {
    throw std::runtime_error(path.string() + ": expected header sample_index,<class column>");
  }
  std::vector<std::size_t> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto fields = text::split(line);
    if (fields.size() != 2) throw std::runtime_error(where + ": expected 2 fields");
    const long long index = text::parse_int(fields[0], where);
    const long long value = text::parse_int(fields[1], where);
    if (index != static_cast<long long>(values.size())) throw std::runtime_error(where + ": sample_index out of order");
    if (value < 0) throw std::runtime_error(where + ": negative class id");
    values.push_back(static_cast<std::size_t>(value));
  }
  return values;
}

void write_game_report(const GameReport& report, const std::filesystem::path& path) {
  write_json(report_json(report), path);
}

void write_outcome_log(const GameReport& report, const std::vector<std::size_t>& truth,
                       const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                       const std::filesystem::path& path) {
  const std::size_t m = report.outcome.samples.size();
  if (truth.size() != m || a.size() != m || b.size() != m) throw std::invalid_argument("outcome log inputs misaligned");
  auto out = text::open_for_write(path);
  out << "sample_index,true_class," << report.player_a << ',' << report.player_b << ",result,winner\n";
  for (std::size_t j = 0; j < m; ++j) {
    const SampleOutcome s = report.outcome.samples[j];
    out << j << ',' << truth[j] << ',' << a[j] << ',' << b[j] << ',';
    switch (s) {
      case SampleOutcome::win_a: out << "win," << report.player_a; break;
      case SampleOutcome::win_b: out << "win," << report.player_b; break;
      default: out << to_string(s) << ','; break;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_best_response_curve(const GameReport& report, const std::filesystem::path& path) {
  auto out = text::open_for_write(path);
  const std::string pa = text::format_double(report.best_response_a);
  const std::string pb = text::format_double(report.best_response_b);
  out << "curve,x,y\n";
  out << report.player_a << ',' << pa << ",0\n";
  out << report.player_a << ',' << pa << ",1\n";
  out << report.player_b << ",0," << pb << '\n';
  out << report.player_b << ",1," << pb << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_tournament_summary(const std::vector<GameReport>& reports, const std::filesystem::path& path) {
  json games = json::array();
  for (const auto& r : reports) games.push_back(report_json(r));
  write_json({{"games", games}}, path);
}

}  // namespace imucaps
