#include <gtest/gtest.h>

#include <thread>

#include "janus/evaluator.hpp"

#ifndef JANUS_STUB_EVALUATOR
#error "JANUS_STUB_EVALUATOR must name the stub evaluator binary"
#endif

namespace janus {
namespace {

std::string stub(const std::string& flags = "") {
  return std::string("'") + JANUS_STUB_EVALUATOR + "' " + flags;
}

std::vector<EvalRequest> requests(int n) {
  std::vector<EvalRequest> r;
  for (int i = 0; i < n; ++i) r.push_back({"m" + std::to_string(i), std::string(static_cast<std::size_t>(i + 1), 'C')});
  return r;
}

TEST(Evaluator, ScoresByNegativeLength) {
  ExternalEvaluator ev({stub(), 10.0, 4});
  auto out = ev.evaluate(requests(10));
  ASSERT_EQ(out.size(), 10u);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(out[static_cast<std::size_t>(i)].id, "m" + std::to_string(i));
    ASSERT_TRUE(out[static_cast<std::size_t>(i)].ok()) << out[static_cast<std::size_t>(i)].error;
    EXPECT_EQ(*out[static_cast<std::size_t>(i)].score, -(i + 1));
  }
  // the same child serves later calls
  auto again = ev.evaluate(requests(3));
  EXPECT_EQ(*again[2].score, -3.0);
  EXPECT_EQ(ev.restarts(), 0u);
}

TEST(Evaluator, ConstantStub) {
  ExternalEvaluator ev({stub("--constant 0"), 10.0, 64});
  for (const auto& r : ev.evaluate(requests(5))) EXPECT_EQ(r.score, 0.0);
}

TEST(Evaluator, ReversedAnswersMatchedById) {
  ExternalEvaluator ev({stub("--reverse 8"), 10.0, 8});
  auto out = ev.evaluate(requests(16));
  for (int i = 0; i < 16; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)].score, -(i + 1));
}

TEST(Evaluator, DroppedIdTimesOutAlone) {
  ExternalEvaluator ev({stub("--drop-every 4"), 0.5, 5});
  auto out = ev.evaluate(requests(5));
  int errors = 0;
  for (int i = 0; i < 5; ++i) {
    const auto& r = out[static_cast<std::size_t>(i)];
    if (i == 3) {
      EXPECT_FALSE(r.ok());
      EXPECT_NE(r.error.find("timeout"), std::string::npos) << r.error;
    } else {
      EXPECT_EQ(r.score, -(i + 1));
    }
    errors += !r.ok();
  }
  EXPECT_EQ(errors, 1);
  // the client restarts the child after a timeout
  auto next = ev.evaluate(requests(2));
  EXPECT_EQ(next[1].score, -2.0);
  EXPECT_EQ(ev.restarts(), 1u);
}

TEST(Evaluator, SlowEvaluatorTimesOut) {
  ExternalEvaluator ev({stub("--delay 5"), 0.3, 4});
  auto t0 = std::chrono::steady_clock::now();
  auto out = ev.evaluate(requests(2));
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(3));
  for (const auto& r : out) EXPECT_NE(r.error.find("timeout"), std::string::npos);
}

TEST(Evaluator, MalformedLinesSkipped) {
  ExternalEvaluator ev({stub("--malformed"), 10.0, 64});
  auto out = ev.evaluate(requests(4));
  for (int i = 0; i < 4; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)].score, -(i + 1));
  EXPECT_EQ(ev.malformed_lines(), 4u);
}

TEST(Evaluator, AnswerWithoutScoreIsPerIdError) {
  ExternalEvaluator ev({stub("--no-score"), 10.0, 64});
  auto out = ev.evaluate(requests(3));
  for (const auto& r : out) {
    EXPECT_FALSE(r.ok());
    EXPECT_NE(r.error.find("malformed"), std::string::npos);
  }
}

TEST(Evaluator, ErrorAnswersPassThrough) {
  ExternalEvaluator ev({stub("--error-every 2"), 10.0, 64});
  auto out = ev.evaluate(requests(4));
  EXPECT_TRUE(out[0].ok());
  EXPECT_EQ(out[1].error, "refused CC");
  EXPECT_TRUE(out[2].ok());
  EXPECT_FALSE(out[3].ok());
}

TEST(Evaluator, ExitedChildGivesErrorsThenRestarts) {
  ExternalEvaluator ev({stub("--exit-after 2"), 10.0, 64});
  auto out = ev.evaluate(requests(4));
  EXPECT_TRUE(out[0].ok());
  EXPECT_TRUE(out[1].ok());
  EXPECT_NE(out[2].error.find("exited"), std::string::npos) << out[2].error;
  EXPECT_FALSE(out[3].ok());
  auto next = ev.evaluate(requests(1));
  EXPECT_TRUE(next[0].ok());
}

TEST(Evaluator, MissingCommandFails) {
  ExternalEvaluator ev({"/nonexistent/evaluator-binary", 5.0, 4});
  EXPECT_THROW(ev.evaluate(requests(1)), Error);
}

TEST(Evaluator, SpecValidation) {
  EXPECT_THROW(ExternalEvaluator({"", 1.0, 1}), PreconditionError);
  EXPECT_THROW(ExternalEvaluator({"cat", 0.0, 1}), PreconditionError);
  EXPECT_THROW(ExternalEvaluator({"cat", 1.0, 0}), PreconditionError);
}

TEST(Evaluator, ConcurrentCallsSerialized) {
  ExternalEvaluator ev({stub(), 10.0, 3});
  std::vector<std::vector<EvalResult>> outs(4);
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t) ts.emplace_back([&, t] { outs[static_cast<std::size_t>(t)] = ev.evaluate(requests(7)); });
  for (auto& th : ts) th.join();
  for (const auto& out : outs) {
    for (int i = 0; i < 7; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)].score, -(i + 1));
  }
}

}  // namespace
}  // namespace janus
