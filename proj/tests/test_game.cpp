#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "imucaps/game.hpp"
#include "support.hpp"

using namespace imucaps;
using imucaps::testing::TempDir;

namespace {

using Labels = std::vector<std::size_t>;

Labels random_labels(std::size_t n, std::size_t classes, std::mt19937_64& engine) {
  std::uniform_int_distribution<std::size_t> dist(0, classes - 1);
  Labels out(n);
  for (auto& v : out) v = dist(engine);
  return out;
}

// Counts by enumerating the four correctness cases per sample.
struct Tally {
  std::size_t a = 0, b = 0, draws = 0;
};

Tally brute_force(const Labels& a, const Labels& b, const Labels& truth) {
  Tally t;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const int code = (a[j] == truth[j] ? 1 : 0) + (b[j] == truth[j] ? 2 : 0);
    if (code == 1) {
      ++t.a;
    } else if (code == 2) {
      ++t.b;
    } else {
      ++t.draws;
    }
  }
  return t;
}

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Adjudicate, WinnerRule) {
  const GameOutcome o = adjudicate({0, 1, 0}, {0, 9, 2}, {0, 1, 2});
  EXPECT_EQ(o.samples[0], SampleOutcome::draw_both_correct);
  EXPECT_EQ(o.samples[1], SampleOutcome::win_a);
  EXPECT_EQ(o.samples[2], SampleOutcome::win_b);
  EXPECT_EQ(o.wins_a, 1u);
  EXPECT_EQ(o.wins_b, 1u);
  EXPECT_EQ(o.draws, 1u);
  EXPECT_EQ(adjudicate({3}, {4}, {5}).samples[0], SampleOutcome::draw_both_wrong);
}

TEST(Adjudicate, RejectsMisalignedOrOutOfRange) {
  EXPECT_THROW(adjudicate({0, 1}, {0}, {0, 1}), std::invalid_argument);
  EXPECT_THROW(adjudicate({0, 1}, {0, 1}, {0}), std::invalid_argument);
  EXPECT_THROW(adjudicate({0, 7}, {0, 1}, {0, 1}, 5), std::out_of_range);
}

TEST(Adjudicate, MatchesBruteForceAndItsInvariants) {
  std::mt19937_64 engine(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + trial % 120;
    const std::size_t classes = 2 + trial % 5;
    const Labels truth = random_labels(m, classes, engine);
    const Labels a = random_labels(m, classes, engine);
    const Labels b = random_labels(m, classes, engine);
    const GameOutcome o = adjudicate(a, b, truth, classes);
    const Tally t = brute_force(a, b, truth);
    EXPECT_EQ(o.wins_a, t.a);
    EXPECT_EQ(o.wins_b, t.b);
    EXPECT_EQ(o.draws, t.draws);
    EXPECT_EQ(o.wins_a + o.wins_b + o.draws, m);

    const GameOutcome swapped = adjudicate(b, a, truth, classes);
    EXPECT_EQ(swapped.wins_a, o.wins_b);
    EXPECT_EQ(swapped.wins_b, o.wins_a);
    EXPECT_EQ(swapped.draws, o.draws);

    std::size_t a_right = 0, b_wrong = 0;
    for (std::size_t j = 0; j < m; ++j) {
      a_right += a[j] == truth[j];
      b_wrong += b[j] != truth[j];
    }
    EXPECT_LE(o.wins_a, a_right);
    EXPECT_LE(o.wins_a, b_wrong);
  }
}

TEST(BestResponse, ExamplesAndErrors) {
  EXPECT_EQ(best_response({1, 2, 3}, {1, 2, 3}), 1.0);
  EXPECT_EQ(best_response({0, 0, 0}, {1, 2, 3}), 0.0);
  EXPECT_EQ(best_response({1, 0, 3, 0}, {1, 2, 3, 4}), 0.5);
  EXPECT_THROW(best_response({}, {}), std::invalid_argument);
  EXPECT_THROW(best_response({1}, {1, 2}), std::invalid_argument);
}

TEST(BestResponse, InvariantUnderJointPermutation) {
  std::mt19937_64 engine(7);
  const Labels truth = random_labels(50, 4, engine);
  const Labels preds = random_labels(50, 4, engine);
  std::vector<std::size_t> order(50);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), engine);
  Labels pt, pp;
  for (std::size_t i : order) {
    pt.push_back(truth[i]);
    pp.push_back(preds[i]);
  }
  EXPECT_EQ(best_response(pp, pt), best_response(preds, truth));
}

TEST(BestResponse, EqualsWinsPlusCorrectDraws) {
  std::mt19937_64 engine(8);
  const Labels truth = random_labels(80, 3, engine);
  const PredictionSet a{"a", random_labels(80, 3, engine)};
  const PredictionSet b{"b", random_labels(80, 3, engine)};
  const GameReport r = play_game("W", a, b, truth);
  std::size_t both = 0;
  for (auto s : r.outcome.samples) both += s == SampleOutcome::draw_both_correct;
  EXPECT_EQ(r.best_response_a, static_cast<double>(r.outcome.wins_a + both) / 80.0);
  EXPECT_EQ(r.best_response_b, static_cast<double>(r.outcome.wins_b + both) / 80.0);
  EXPECT_EQ(r.nash(), std::make_pair(r.best_response_a, r.best_response_b));
}

TEST(Tournament, IdenticalPlayersOnlyDraw) {
  const Labels truth{0, 1, 2, 3, 0, 1};
  const Labels same{0, 2, 2, 1, 0, 1};
  const auto reports = run_tournament({"cnn", same}, {"capsnet-3", same}, {"capsnet-5", same}, truth);
  ASSERT_EQ(reports.size(), 3u);
  for (const auto& r : reports) {
    EXPECT_EQ(r.outcome.wins_a, 0u);
    EXPECT_EQ(r.outcome.wins_b, 0u);
    EXPECT_EQ(r.outcome.draws, truth.size());
  }
  EXPECT_EQ(reports[0].player_a, "cnn");
  EXPECT_EQ(reports[0].player_b, "capsnet-3");
  EXPECT_EQ(reports[1].player_b, "capsnet-5");
  EXPECT_EQ(reports[2].player_a, "capsnet-3");
  EXPECT_EQ(reports[2].name, "W3");
}

TEST(Tournament, PerfectPlayerWinsEverySampleAgainstAllWrong) {
  const Labels truth{0, 1, 2, 1};
  const GameReport r = play_game("W1", {"perfect", truth}, {"wrong", {1, 2, 0, 0}}, truth);
  EXPECT_EQ(r.outcome.wins_a, 4u);
  EXPECT_EQ(r.best_response_a, 1.0);
  EXPECT_EQ(r.best_response_b, 0.0);
}

TEST(Tournament, PairwiseOrderMatchesFixedTournament) {
  std::mt19937_64 engine(10);
  const Labels truth = random_labels(40, 5, engine);
  const PredictionSet x{"x", random_labels(40, 5, engine)};
  const PredictionSet y{"y", random_labels(40, 5, engine)};
  const PredictionSet z{"z", random_labels(40, 5, engine)};
  const auto fixed = run_tournament(x, y, z, truth);
  const auto pairwise = run_pairwise({x, y, z}, truth);
  ASSERT_EQ(pairwise.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(fixed[i].name, pairwise[i].name);
    EXPECT_EQ(fixed[i].player_a, pairwise[i].player_a);
    EXPECT_EQ(fixed[i].outcome.wins_a, pairwise[i].outcome.wins_a);
  }
  EXPECT_THROW(run_tournament(x, y, {"short", {1}}, truth), std::invalid_argument);
}

TEST(GameFiles, PredictionsRoundTripAndReportsAreWritten) {
  TempDir dir("game");
  const Labels truth{0, 1, 2};
  write_predictions_csv({0, 1, 0}, dir / "a.csv");
  write_truth_csv(truth, dir / "t.csv");
  EXPECT_EQ(read_predictions_csv(dir / "a.csv"), (Labels{0, 1, 0}));
  EXPECT_EQ(read_predictions_csv(dir / "t.csv"), truth);

  const GameReport r = play_game("W1", {"a", {0, 1, 0}}, {"b", {0, 9, 2}}, truth);
  write_game_report(r, dir / "r.json");
  write_outcome_log(r, truth, {0, 1, 0}, {0, 9, 2}, dir / "o.csv");
  write_best_response_curve(r, dir / "c.csv");
  EXPECT_NE(read_all(dir / "r.json").find("\"draws\": 1"), std::string::npos);
  EXPECT_EQ(read_all(dir / "o.csv"),
            "sample_index,true_class,a,b,result,winner\n0,0,0,0,draw_both_correct,\n1,1,1,9,win,a\n2,2,0,2,win,b\n");
  EXPECT_EQ(read_all(dir / "c.csv"),
            "curve,x,y\na,0.66666666666666663,0\na,0.66666666666666663,1\nb,0,0.66666666666666663\n"
            "b,1,0.66666666666666663\n");
}

TEST(GameFiles, RejectsMalformedPredictions) {
  TempDir dir("game");
  {
    std::ofstream out(dir / "gap.csv");
    out << "sample_index,predicted_class\n0,1\n2,1\n";
  }
  EXPECT_THROW(read_predictions_csv(dir / "gap.csv"), std::runtime_error);
  {
    std::ofstream out(dir / "text.csv");
    out << "sample_index,predicted_class\n0,cat\n";
  }
  EXPECT_THROW(read_predictions_csv(dir / "text.csv"), std::runtime_error);
}
