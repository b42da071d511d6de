#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "nudge/generator.h"

namespace nudge {
namespace {

using namespace std::chrono_literals;

class GeneratorServer : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/ok", [](const httplib::Request& req, httplib::Response& res) {
      const auto in = nlohmann::json::parse(req.body);
      res.set_content(nlohmann::json{{"draft", "re: " + in.at("input").get<std::string>()}}.dump(),
                      "application/json");
    });
    server_.Post("/fail", [](const httplib::Request&, httplib::Response& res) {
      res.status = 503;
      res.set_content("busy", "text/plain");
    });
    server_.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("{not json", "application/json");
    });
    server_.Post("/wrongshape", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"text": "hi"})", "application/json");
    });
    server_.Post("/empty", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"draft": "   "})", "application/json");
    });
    server_.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(600ms);
      res.set_content(R"({"draft": "late"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url(const std::string& path) const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST_F(GeneratorServer, ReturnsDraft) {
  const HttpGenerator gen(url("/ok"), 2000ms);
  EXPECT_EQ(gen.generate("great game \"tonight\""), "re: great game \"tonight\"");
}

TEST_F(GeneratorServer, ErrorsSurfaceAsGenerationError) {
  for (const char* path : {"/fail", "/garbage", "/wrongshape", "/empty", "/missing"}) {
    const HttpGenerator gen(url(path), 2000ms);
    EXPECT_THROW(gen.generate("hello"), GenerationError) << path;
  }
}

TEST_F(GeneratorServer, TimeoutIsGenerationError) {
  const HttpGenerator gen(url("/slow"), 100ms);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(gen.generate("hello"), GenerationError);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 550ms);
}

TEST_F(GeneratorServer, ConcurrentCallsShareOneClient) {
  const HttpGenerator gen(url("/ok"), 2000ms);
  std::atomic<int> good{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < 10; ++i) {
        const auto in = "t" + std::to_string(t) + "-" + std::to_string(i);
        if (gen.generate(in) == "re: " + in) ++good;
      }
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(good.load(), 40);
}

TEST(HttpGenerator, RefusesUnreachableAndBadUrls) {
  EXPECT_THROW(HttpGenerator("localhost:80/x", 100ms), ConfigError);
  EXPECT_THROW(HttpGenerator("https://example.com/x", 100ms), ConfigError);
  // Port 1 is reserved and closed.
  const HttpGenerator gen("http://127.0.0.1:1/gen", 200ms);
  EXPECT_THROW(gen.generate("x"), GenerationError);
}

TEST(TemplateEcho, DeterministicAndUsesSalientWord) {
  const TemplateEchoGenerator gen;
  EXPECT_EQ(gen.generate("the Lakers won"), gen.generate("the Lakers won"));
  EXPECT_NE(gen.generate("the Lakers won").find("lakers"), std::string::npos);
  EXPECT_NE(gen.generate("a b c").find("this"), std::string::npos);
  EXPECT_THROW(gen.generate("  "), GenerationError);
}

}  // namespace
}  // namespace nudge
