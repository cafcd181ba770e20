#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "raw2raw/errors.hpp"
#include "raw2raw/raw.hpp"
#include "raw2raw/raw_io.hpp"
#include "test_helpers.hpp"

using namespace raw2raw;
using testutil::basic_meta;
using testutil::constant_frame;
using testutil::random_frame;
using testutil::scratch_dir;

namespace {

RawMosaic make_mosaic(int w, int h, CfaPattern pattern, uint16_t fill = 0) {
  RawMosaic m;
  m.width = w;
  m.height = h;
  m.max_value = 1023;
  m.cfa_pattern = pattern;
  m.data.assign(static_cast<size_t>(w) * h, fill);
  return m;
}

}  // namespace

TEST_CASE("normalize_raw applies the black/white formula with clamping") {
  RawMosaic m = make_mosaic(2, 2, CfaPattern::RGGB);
  CameraMeta meta = basic_meta();

  m.data = {512, 512, 512, 512};
  RawFrame f = normalize_raw(m, meta);
  for (int c = 0; c < 4; ++c)
    CHECK(f.channels[c].at(0, 0) == doctest::Approx(448.0 / 959.0).epsilon(1e-6));

  m.data = {64, 64, 64, 64};
  f = normalize_raw(m, meta);
  for (int c = 0; c < 4; ++c) CHECK(f.channels[c].at(0, 0) == 0.0f);

  m.data = {32, 32, 32, 32};  // below black level, clamps to 0
  f = normalize_raw(m, meta);
  for (int c = 0; c < 4; ++c) CHECK(f.channels[c].at(0, 0) == 0.0f);
}

TEST_CASE("normalize_raw rejects bad inputs") {
  CameraMeta meta = basic_meta();
  RawMosaic odd = make_mosaic(3, 2, CfaPattern::RGGB);
  CHECK_THROWS_AS(normalize_raw(odd, meta), FormatError);

  RawMosaic m = make_mosaic(2, 2, CfaPattern::RGGB);
  meta.black_level = {1023, 64, 64, 64};
  CHECK_THROWS_AS(normalize_raw(m, meta), MetadataError);
}

TEST_CASE("normalize_raw is monotone and stays in [0,1]") {
  CameraMeta meta = basic_meta();
  float prev = -1.0f;
  for (int v = 0; v <= 1100; v += 25) {
    RawMosaic m = make_mosaic(2, 2, CfaPattern::RGGB,
                              static_cast<uint16_t>(std::min(v, 1023)));
    m.max_value = 1023;
    const RawFrame f = normalize_raw(m, meta);
    const float out = f.channels[0].at(0, 0);
    CHECK(out >= 0.0f);
    CHECK(out <= 1.0f);
    CHECK(out >= prev);
    prev = out;
  }
}

TEST_CASE("pack_rggb maps 2x2 tiles per pattern") {
  RawMosaic m = make_mosaic(2, 2, CfaPattern::RGGB);
  m.data = {10, 20, 30, 40};  // [a b; c d]

  auto planes = pack_rggb(m);
  CHECK(planes[0].at(0, 0) == 10);  // R = a
  CHECK(planes[1].at(0, 0) == 20);  // Gr = b
  CHECK(planes[2].at(0, 0) == 30);  // Gb = c
  CHECK(planes[3].at(0, 0) == 40);  // B = d

  m.cfa_pattern = CfaPattern::BGGR;
  planes = pack_rggb(m);
  CHECK(planes[0].at(0, 0) == 40);  // R = d
  CHECK(planes[1].at(0, 0) == 30);  // Gr = c
  CHECK(planes[2].at(0, 0) == 20);  // Gb = b
  CHECK(planes[3].at(0, 0) == 10);  // B = a
}

TEST_CASE("pack_rggb GRBG agrees with a position-by-position index oracle") {
  RawMosaic m = make_mosaic(4, 4, CfaPattern::GRBG);
  for (size_t i = 0; i < m.data.size(); ++i) m.data[i] = static_cast<uint16_t>(i + 1);

  const auto planes = pack_rggb(m);
  // Brute-force oracle: enumerate photosites, route by CFA position.
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const int c = cfa_channel_at(CfaPattern::GRBG, y % 2, x % 2);
      CHECK(planes[c].at(x / 2, y / 2) == m.at(x, y));
    }
  }
  CHECK_THROWS_AS(pack_rggb(make_mosaic(3, 4, CfaPattern::GRBG)), FormatError);
}

TEST_CASE("pack then unpack round-trips a canonical frame") {
  const RawFrame f = random_frame(8, 6, 42);
  for (auto pattern : {CfaPattern::RGGB, CfaPattern::BGGR, CfaPattern::GRBG, CfaPattern::GBRG}) {
    RawMosaic m = unpack_rggb(f, 65535, pattern);
    const auto planes = pack_rggb(m);
    for (int c = 0; c < 4; ++c)
      for (size_t i = 0; i < planes[c].data.size(); ++i)
        CHECK(planes[c].data[i] / 65535.0f ==
              doctest::Approx(f.channels[c].data[i]).epsilon(1e-4));
  }
}

TEST_CASE("orient returns identity for Normal and undoes Rot180") {
  RawFrame f = random_frame(6, 4, 7);
  f.meta.orientation = Orientation::Normal;
  const RawFrame same = orient(f);
  CHECK(same.channels == f.channels);

  // rotate180 is an involution
  const Plane p = f.channels[0];
  CHECK(rotate180(rotate180(p)) == p);

  f.meta.orientation = Orientation::Rot180;
  const RawFrame fixed = orient(f);
  for (int c = 0; c < 4; ++c) CHECK(fixed.channels[c] == rotate180(f.channels[c]));
  CHECK(fixed.meta.orientation == Orientation::Normal);
}

TEST_CASE("orient Rot90 swaps plane dims and traces corners") {
  RawFrame f = constant_frame(2, 4, 0, 0, 0, 0);
  // distinct corner markers in plane 0
  f.channels[0].at(0, 0) = 1.0f;
  f.channels[0].at(1, 3) = 0.5f;
  f.meta.orientation = Orientation::Rot90;

  const RawFrame fixed = orient(f);
  CHECK(fixed.channels[0].width == 4);
  CHECK(fixed.channels[0].height == 2);
  // stored = canonical rotated 90 cw, so orient applies 90 ccw:
  // (x,y) -> (y, width-1-x)
  CHECK(fixed.channels[0].at(0, 1) == 1.0f);
  CHECK(fixed.channels[0].at(3, 0) == 0.5f);
}

TEST_CASE("orient transforms are bijections on pixel positions") {
  const Plane p = testutil::random_plane(6, 4, 3);
  CHECK(rotate90ccw(rotate90cw(p)) == p);
  CHECK(flip_h(flip_h(p)) == p);
  CHECK(flip_v(flip_v(p)) == p);
}

TEST_CASE("channel_mean_vector") {
  const RawFrame f = constant_frame(4, 4, 0.1f, 0.2f, 0.3f, 0.4f);
  const auto m = channel_mean_vector(f);
  CHECK(m[0] == doctest::Approx(0.1));
  CHECK(m[1] == doctest::Approx(0.2));
  CHECK(m[2] == doctest::Approx(0.3));
  CHECK(m[3] == doctest::Approx(0.4));

  const auto z = channel_mean_vector(constant_frame(4, 4, 0, 0, 0, 0));
  for (double v : z) CHECK(v == 0.0);

  // direct summation oracle on a random 8x8 frame
  const RawFrame r = random_frame(8, 8, 99);
  const auto mv = channel_mean_vector(r);
  for (int c = 0; c < 4; ++c) {
    double sum = 0;
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) sum += r.channels[c].at(x, y);
    CHECK(mv[c] == doctest::Approx(sum / 64.0).epsilon(1e-12));
  }

  RawFrame empty;
  CHECK_THROWS_AS(channel_mean_vector(empty), EmptyResultError);
}

TEST_CASE("select_reference picks the closest channel-mean vector") {
  const RawFrame q = constant_frame(4, 4, 0.5f, 0.5f, 0.5f, 0.5f);
  std::vector<RawFrame> cands;
  cands.push_back(constant_frame(4, 4, 0.4f, 0.4f, 0.4f, 0.4f));
  cands.push_back(constant_frame(4, 4, 0.45f, 0.45f, 0.45f, 0.45f));
  CHECK(select_reference(q, cands) == 1);

  cands.push_back(q);  // exact match wins
  CHECK(select_reference(q, cands) == 2);

  CHECK_THROWS_AS(select_reference(q, {}), EmptyResultError);
}

TEST_CASE("select_reference matches an exhaustive scan on random candidates") {
  const RawFrame q = random_frame(8, 8, 1);
  std::vector<RawFrame> cands;
  for (uint32_t s = 2; s < 12; ++s) cands.push_back(random_frame(8, 8, s));

  const size_t got = select_reference(q, cands);

  const auto qm = channel_mean_vector(q);
  size_t best = 0;
  double best_d = 1e300;
  for (size_t i = 0; i < cands.size(); ++i) {
    const auto cm = channel_mean_vector(cands[i]);
    double d = 0;
    for (int c = 0; c < 4; ++c) d += (qm[c] - cm[c]) * (qm[c] - cm[c]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  CHECK(got == best);
}

TEST_CASE("select_reference is invariant to uniform scaling of query and candidates") {
  const RawFrame q = random_frame(8, 8, 21, 0.1f, 0.5f);
  std::vector<RawFrame> cands;
  for (uint32_t s = 31; s < 39; ++s) cands.push_back(random_frame(8, 8, s, 0.1f, 0.5f));
  const size_t base = select_reference(q, cands);

  auto scale = [](RawFrame f, float s) {
    for (auto& p : f.channels)
      for (auto& v : p.data) v *= s;
    return f;
  };
  RawFrame qs = scale(q, 1.7f);
  std::vector<RawFrame> cs;
  for (const auto& c : cands) cs.push_back(scale(c, 1.7f));
  CHECK(select_reference(qs, cs) == base);
}

TEST_CASE("rgg4 write/read round-trip is exact") {
  const auto dir = scratch_dir("rgg4");
  RawFrame f = random_frame(10, 6, 5);
  f.meta.orientation = Orientation::FlipH;
  f.meta.iso = 800;
  f.meta.cfa_pattern = CfaPattern::GBRG;

  const auto path = dir / "frame.rgg4";
  write_frame(f, path);
  const RawFrame g = read_frame(path);
  CHECK(g.channels == f.channels);
  CHECK(g.meta == f.meta);
}

TEST_CASE("rgg4 reader rejects malformed files") {
  const auto dir = scratch_dir("rgg4_bad");

  {
    std::ofstream os(dir / "bad.rgg4", std::ios::binary);
    os << "NOPE" << std::string(64, '\0');
  }
  write_meta_sidecar(basic_meta(), dir / "bad.json");
  CHECK_THROWS_AS(read_frame(dir / "bad.rgg4"), FormatError);

  // truncated payload
  write_frame(random_frame(8, 8, 1), dir / "t.rgg4");
  {
    std::ifstream is(dir / "t.rgg4", std::ios::binary);
    std::vector<char> buf(64);
    is.read(buf.data(), 64);
    std::ofstream os(dir / "t2.rgg4", std::ios::binary);
    os.write(buf.data(), 64);
  }
  write_meta_sidecar(basic_meta(), dir / "t2.json");
  CHECK_THROWS_AS(read_frame(dir / "t2.rgg4"), FormatError);
}

TEST_CASE("metadata sidecar rejects unknown fields and schema violations") {
  const auto dir = scratch_dir("sidecar");
  {
    std::ofstream os(dir / "extra.json");
    os << R"({"camera_id":"x","black_level":[0,0,0,0],"white_level":100,)"
       << R"("orientation":"Normal","iso":null,"cfa_pattern":"RGGB","bogus":1})";
  }
  CHECK_THROWS_AS(read_meta_sidecar(dir / "extra.json"), MetadataError);

  {
    std::ofstream os(dir / "short.json");
    os << R"({"camera_id":"x","black_level":[0,0,0],"white_level":100,)"
       << R"("orientation":"Normal","iso":null,"cfa_pattern":"RGGB"})";
  }
  CHECK_THROWS_AS(read_meta_sidecar(dir / "short.json"), MetadataError);

  {
    std::ofstream os(dir / "missing.json");
    os << R"({"camera_id":"x"})";
  }
  CHECK_THROWS_AS(read_meta_sidecar(dir / "missing.json"), MetadataError);
}

TEST_CASE("16-bit PGM ingestion equals normalize_raw of the same mosaic") {
  const auto dir = scratch_dir("pgm");
  // synthesize a deterministic 8x8 mosaic
  RawMosaic m = make_mosaic(8, 8, CfaPattern::RGGB);
  std::mt19937 rng(11);
  for (auto& v : m.data) v = static_cast<uint16_t>(rng() % 1024);

  {
    std::ofstream os(dir / "m.pgm", std::ios::binary);
    os << "P5\n8 8\n1023\n";
    for (uint16_t v : m.data) {
      os.put(static_cast<char>(v >> 8));  // big-endian samples
      os.put(static_cast<char>(v & 0xff));
    }
  }
  const RawMosaic loaded = read_pgm(dir / "m.pgm", CfaPattern::RGGB);
  CHECK(loaded.data == m.data);
  CHECK(loaded.max_value == 1023);

  const CameraMeta meta = basic_meta();
  const RawFrame via_pgm = normalize_raw(loaded, meta);
  const RawFrame direct = normalize_raw(m, meta);
  CHECK(via_pgm.channels == direct.channels);
}

TEST_CASE("PGM reader rejects bad headers") {
  const auto dir = scratch_dir("pgm_bad");
  {
    std::ofstream os(dir / "p2.pgm");
    os << "P2\n2 2\n255\n0 0 0 0\n";
  }
  CHECK_THROWS_AS(read_pgm(dir / "p2.pgm", CfaPattern::RGGB), FormatError);
  {
    std::ofstream os(dir / "trunc.pgm", std::ios::binary);
    os << "P5\n8 8\n1023\n";
    os.put(0);
  }
  CHECK_THROWS_AS(read_pgm(dir / "trunc.pgm", CfaPattern::RGGB), FormatError);
}
