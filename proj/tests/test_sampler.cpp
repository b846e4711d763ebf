#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "hybridlm/errors.hpp"
#include "hybridlm/sampler.hpp"

using namespace hybridlm;

namespace {

// Rigged backend: fixed per-position logits tables, call counting.
class RiggedBackend : public DenoiseBackend {
public:
    RiggedBackend(int vocab, int mask, int maxlen) : vocab_(vocab), mask_(mask), maxlen_(maxlen) {}

    // logit table for absolute position p (defaults to peaking on token p % vocab)
    void set_row(int pos, std::vector<float> logits) { rows_[pos] = std::move(logits); }

    int vocab_size() const override { return vocab_; }
    int mask_id() const override { return mask_; }
    int max_len() const override { return maxlen_; }
    int hidden_width() const override { return 4; }

    void forward(const std::vector<int>& canvas, ad::TensorData* logits, ad::TensorData* hidden) const override {
        ++calls_;
        const int L = static_cast<int>(canvas.size());
        if (logits) {
            *logits = ad::TensorData({L, vocab_});
            for (int p = 0; p < L; ++p) {
                auto it = rows_.find(p);
                for (int j = 0; j < vocab_; ++j) {
                    logits->at(p, j) = it != rows_.end() ? it->second[j] : (j == (p % vocab_) && j != mask_ ? 5.0f : 0.0f);
                }
            }
        }
        if (hidden) {
            *hidden = ad::TensorData({L, 4});
            for (int p = 0; p < L; ++p) {
                for (int j = 0; j < 4; ++j) hidden->at(p, j) = static_cast<float>(canvas[p]) + 0.25f * j;
            }
        }
    }

    mutable int calls_ = 0;

private:
    int vocab_;
    int mask_;
    int maxlen_;
    std::map<int, std::vector<float>> rows_;
};

}  // namespace

TEST_CASE("unmask schedule fixtures") {
    CHECK(unmask_schedule(64, 1) == std::vector<int>{64});
    CHECK(unmask_schedule(64, 64) == std::vector<int>(64, 1));
    CHECK(unmask_schedule(10, 4) == std::vector<int>{3, 3, 2, 2});
    CHECK_THROWS_AS(unmask_schedule(4, 5), ConfigError);
    CHECK_THROWS_AS(unmask_schedule(4, 0), ConfigError);
}

TEST_CASE("schedule partition properties across plan lengths") {
    for (int plan_len : {64, 128, 256}) {
        for (int steps = 1; steps <= plan_len; steps *= 2) {
            const auto counts = unmask_schedule(plan_len, steps);
            CHECK(static_cast<int>(counts.size()) == steps);
            int sum = 0;
            for (size_t i = 0; i < counts.size(); ++i) {
                sum += counts[i];
                if (i) CHECK(counts[i - 1] >= counts[i]);           // larger counts first
                CHECK(std::abs(counts[i] - counts[0]) <= 1);        // balanced
            }
            CHECK(sum == plan_len);
        }
    }
}

TEST_CASE("one-step denoise equals per-position argmax with low-id tie break") {
    RiggedBackend model(8, 4, 64);
    SamplerConfig cfg;
    cfg.plan_len = 6;
    cfg.steps = 1;
    auto res = denoise(model, {0, 1}, cfg);
    // absolute positions 2..7 peak on (pos % 8); position 4 would peak on the
    // mask id, so its row is flat and the lowest non-mask id (0) wins the tie.
    CHECK(res.plan_tokens == std::vector<int>{2, 3, 0, 5, 6, 7});
}

TEST_CASE("constant confident token fills the whole plan for any step count") {
    RiggedBackend model(6, 4, 300);
    for (int pos = 0; pos < 300; ++pos) model.set_row(pos, {0, 0, 9.0f, 0, 0, 0});
    for (int steps : {1, 2, 4, 8}) {
        SamplerConfig cfg;
        cfg.plan_len = 16;
        cfg.steps = steps;
        auto res = denoise(model, {1}, cfg);
        CHECK(res.plan_tokens == std::vector<int>(16, 2));
    }
}

TEST_CASE("hand-enumerated unmask order on a fixed 4-position table") {
    // plan positions at absolute 1..4 (prompt length 1), vocab 6, mask 4.
    // Confidences are ordered pos3 > pos1 > pos4 > pos2 by peak size.
    RiggedBackend model(6, 4, 16);
    model.set_row(1, {0, 6.0f, 0, 0, 0, 0});   // peak tok 1, mid confidence
    model.set_row(2, {0, 0, 1.0f, 0, 0, 0});   // weak peak tok 2
    model.set_row(3, {0, 0, 0, 9.0f, 0, 0});   // strongest, tok 3
    model.set_row(4, {5.0f, 0, 0, 0, 0, 0});   // tok 0
    SamplerConfig cfg;
    cfg.plan_len = 4;
    cfg.steps = 2;

    auto res = denoise(model, {5}, cfg);
    // schedule [2,2]: step 0 takes plan positions 2 and 0 (abs 3 and 1)
    REQUIRE(res.trace.steps.size() == 2);
    CHECK(res.trace.steps[0].positions == std::vector<int>{0, 2});
    CHECK(res.trace.steps[0].tokens == std::vector<int>{1, 3});
    CHECK(res.trace.steps[1].positions == std::vector<int>{1, 3});
    CHECK(res.trace.steps[1].tokens == std::vector<int>{2, 0});
    CHECK(res.plan_tokens == std::vector<int>{1, 2, 3, 0});
}

TEST_CASE("sampler invariants: completeness, monotonicity, fixed forward count") {
    RiggedBackend model(10, 4, 400);
    for (int plan_len : {32, 64}) {
        for (int steps : {1, 2, 5, 13, 32}) {
            SamplerConfig cfg;
            cfg.plan_len = plan_len;
            cfg.steps = steps;
            model.calls_ = 0;
            auto res = denoise(model, {0, 1, 2}, cfg);

            CHECK(model.calls_ == steps + 1);
            CHECK(res.trace.forward_passes == steps + 1);
            for (int tok : res.plan_tokens) CHECK(tok != model.mask_id());

            // strictly shrinking masked sets, committed tokens never change
            std::set<int> seen;
            for (const auto& rec : res.trace.steps) {
                CHECK(!rec.positions.empty());
                for (size_t i = 0; i < rec.positions.size(); ++i) {
                    CHECK(!seen.count(rec.positions[i]));
                    seen.insert(rec.positions[i]);
                    CHECK(res.plan_tokens[rec.positions[i]] == rec.tokens[i]);
                }
            }
            CHECK(static_cast<int>(seen.size()) == plan_len);
        }
    }
}

TEST_CASE("denoise determinism and length guard") {
    RiggedBackend model(6, 4, 32);
    SamplerConfig cfg;
    cfg.plan_len = 8;
    cfg.steps = 4;
    auto a = denoise(model, {1, 2}, cfg);
    auto b = denoise(model, {1, 2}, cfg);
    CHECK(a.plan_tokens == b.plan_tokens);
    CHECK(a.plan_hidden.data == b.plan_hidden.data);

    cfg.plan_len = 31;
    CHECK_THROWS_AS(denoise(model, {0, 1, 2}, cfg), LengthError);
}

TEST_CASE("plan hidden comes from the clean final canvas") {
    RiggedBackend model(6, 4, 32);
    SamplerConfig cfg;
    cfg.plan_len = 3;
    cfg.steps = 3;
    auto res = denoise(model, {2}, cfg);
    // rigged hidden encodes the canvas token value at each position
    for (int p = 0; p < 3; ++p) {
        CHECK(res.plan_hidden.at(p, 0) == doctest::Approx(static_cast<float>(res.plan_tokens[p])));
    }
}

TEST_CASE("trace dump uses 5-decimal fixed point") {
    RiggedBackend model(6, 4, 32);
    SamplerConfig cfg;
    cfg.plan_len = 2;
    cfg.steps = 1;
    auto res = denoise(model, {0}, cfg);
    std::ostringstream os;
    write_trace(os, res.trace);
    const std::string dump = os.str();
    CHECK(dump.find("step 0") != std::string::npos);
    CHECK(dump.find("forward_passes 2") != std::string::npos);
    // a confidence with exactly 5 decimals
    const size_t colon = dump.rfind(':');
    REQUIRE(colon != std::string::npos);
    const std::string tail = dump.substr(colon + 1);
    const size_t dot = tail.find('.');
    REQUIRE(dot != std::string::npos);
    CHECK(tail.substr(dot + 1).find_first_not_of("0123456789") == 5);
}
