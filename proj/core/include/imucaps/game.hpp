#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace imucaps {

/// One classifier's picks over an ordered test set.
struct PredictionSet {
  std::string player;
  std::vector<std::size_t> predictions;
};

enum class SampleOutcome { win_a, win_b, draw_both_correct, draw_both_wrong };

std::string to_string(SampleOutcome outcome);

struct GameOutcome {
  std::vector<SampleOutcome> samples;
  std::size_t wins_a = 0;
  std::size_t wins_b = 0;
  std::size_t draws = 0;  // wins_a + wins_b + draws == samples.size()
};

/// A sample is a win for a player iff that player alone picks the true class;
/// every other combination is a draw. `class_count` of 0 skips range checks.
GameOutcome adjudicate(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                       const std::vector<std::size_t>& truth, std::size_t class_count = 0);

/// Fraction of samples whose pick equals the truth. Throws on an empty or misaligned set.
double best_response(const std::vector<std::size_t>& predictions, const std::vector<std::size_t>& truth);

struct GameReport {
  std::string name;
  std::string player_a;
  std::string player_b;
  double best_response_a = 0.0;
  double best_response_b = 0.0;
  GameOutcome outcome;

  /// Equilibrium of the single-strategy game: the pair of best responses.
  std::pair<double, double> nash() const { return {best_response_a, best_response_b}; }
};

GameReport play_game(const std::string& name, const PredictionSet& a, const PredictionSet& b,
                     const std::vector<std::size_t>& truth, std::size_t class_count = 0);

/// W1 = (cnn, capsnet3), W2 = (cnn, capsnet5), W3 = (capsnet3, capsnet5).
std::vector<GameReport> run_tournament(const PredictionSet& cnn, const PredictionSet& capsnet3,
                                       const PredictionSet& capsnet5, const std::vector<std::size_t>& truth,
                                       std::size_t class_count = 0);

/// Every pair (i < j) in order, named W1, W2, ...
std::vector<GameReport> run_pairwise(const std::vector<PredictionSet>& players, const std::vector<std::size_t>& truth,
                                     std::size_t class_count = 0);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

/// `sample_index,predicted_class` rows with sample_index 0 .. m-1 in order.
void write_predictions_csv(const std::vector<std::size_t>& predictions, const std::filesystem::path& path);
/// Accepts a `sample_index,<column>` header; indices must run 0 .. m-1.
std::vector<std::size_t> read_predictions_csv(const std::filesystem::path& path);
/// `sample_index,true_class`.
void write_truth_csv(const std::vector<std::size_t>& truth, const std::filesystem::path& path);

/// JSON: name, players, samples, wins and best responses (in player order), draws, Nash pair.
void write_game_report(const GameReport& report, const std::filesystem::path& path);
/// `sample_index,true_class,<a>,<b>,result,winner` with result win|draw_both_correct|draw_both_wrong.
void write_outcome_log(const GameReport& report, const std::vector<std::size_t>& truth,
                       const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                       const std::filesystem::path& path);
/// `curve,x,y`: each player's best response drawn as a two-point step line,
/// player A vertical at x = p_A, player B horizontal at y = p_B. They cross at the Nash pair.
void write_best_response_curve(const GameReport& report, const std::filesystem::path& path);
/// Summary of several games as one JSON document.
void write_tournament_summary(const std::vector<GameReport>& reports, const std::filesystem::path& path);

}  // namespace imucaps
