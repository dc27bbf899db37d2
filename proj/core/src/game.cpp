#include "imucaps/game.hpp"

#include <stdexcept>

namespace imucaps {

namespace {

void check_aligned(std::size_t a, std::size_t b, std::size_t truth) {
  if (a != truth || b != truth) {
    throw std::invalid_argument("prediction lengths " + std::to_string(a) + " and " + std::to_string(b) +
                                " do not match truth length " + std::to_string(truth));
  }
}

void check_range(const std::vector<std::size_t>& ids, std::size_t class_count, const char* what) {
  if (!class_count) return;
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (ids[j] >= class_count) {
      throw std::out_of_range(std::string(what) + " sample " + std::to_string(j) + " has class " +
                              std::to_string(ids[j]) + " outside [0, " + std::to_string(class_count) + ")");
    }
  }
}

}  // namespace

std::string to_string(SampleOutcome outcome) {
  switch (outcome) {
    case SampleOutcome::win_a: return "win_a";
    case SampleOutcome::win_b: return "win_b";
    case SampleOutcome::draw_both_correct: return "draw_both_correct";
    case SampleOutcome::draw_both_wrong: break;
  }
  return "draw_both_wrong";
}

GameOutcome adjudicate(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                       const std::vector<std::size_t>& truth, std::size_t class_count) {
  check_aligned(a.size(), b.size(), truth.size());
  check_range(a, class_count, "player A");
  check_range(b, class_count, "player B");
  check_range(truth, class_count, "truth");
  GameOutcome out;
  out.samples.reserve(truth.size());
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const bool a_right = a[j] == truth[j];
    const bool b_right = b[j] == truth[j];
    SampleOutcome s;
    if (a_right && !b_right) {
      s = SampleOutcome::win_a;
      ++out.wins_a;
    } else if (b_right && !a_right) {
      s = SampleOutcome::win_b;
      ++out.wins_b;
    } else {
      s = a_right ? SampleOutcome::draw_both_correct : SampleOutcome::draw_both_wrong;
      ++out.draws;
    }
    out.samples.push_back(s);
  }
  return out;
}

double best_response(const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& truth) {
  if (truth.empty()) throw std::invalid_argument("best response is undefined on zero samples");
  if (predictions.size() != truth.size()) throw std::invalid_argument("prediction and truth lengths differ");
  std::size_t correct = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) correct += predictions[j] == truth[j] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

GameReport play_game(const std::string& name, const PredictionSet& a, const PredictionSet& b,
                     const std::vector<std::size_t>& truth, std::size_t class_count) {
  GameReport report;
  report.name = name;
  report.player_a = a.player;
  report.player_b = b.player;
  report.outcome = adjudicate(a.predictions, b.predictions, truth, class_count);
  report.best_response_a = best_response(a.predictions, truth);
  report.best_response_b = best_response(b.predictions, truth);
  return report;
}

std::vector<GameReport> run_tournament(const PredictionSet& cnn, const PredictionSet& capsnet3,
                                       const PredictionSet& capsnet5, const std::vector<std::size_t>& truth,
                                       std::size_t class_count) {
  return {play_game("W1", cnn, capsnet3, truth, class_count), play_game("W2", cnn, capsnet5, truth, class_count),
          play_game("W3", capsnet3, capsnet5, truth, class_count)};
}

std::vector<GameReport> run_pairwise(const std::vector<PredictionSet>& players, const std::vector<std::size_t>& truth,
                                     std::size_t class_count) {
  if (players.size() < 2) throw std::invalid_argument("a game needs at least two players");
  std::vector<GameReport> reports;
  for (std::size_t i = 0; i < players.size(); ++i) {
    for (std::size_t j = i + 1; j < players.size(); ++j) {
      reports.push_back(
          play_game("W" + std::to_string(reports.size() + 1), players[i], players[j], truth, class_count));
    }
  }
  return reports;
}

}  // namespace imucaps
