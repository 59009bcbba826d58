#include <gtest/gtest.h>

#include <cstring>

#include "certmark/record.hpp"
#include "testing.hpp"

namespace certmark {
namespace {

Record sample_record() {
  Record r;
  r.tensors.add("sub0.layer0.readout.weight", Tensor<float>({2, 3}, std::vector<float>{1, -2, 3.5f, 0, 1e-8f, -0.0f}));
  r.tensors.add("sub0.layer0.readout.bias", Tensor<float>({3}, std::vector<float>{0.25f, 0.5f, 0.75f}));
  r.tensors.add("client0.cwg.gating.linear0.bias", Tensor<float>({1}, std::vector<float>{42}));
  r.metadata = R"({"round":3})";
  return r;
}

// Offset of the first payload length prefix: everything before it is header,
// manifest and metadata.
std::size_t first_payload_offset(const Record& r) {
  std::size_t off = 4 + 4 + 8;
  for (const auto& [name, t] : r.tensors) off += 4 + name.size() + 1 + 4 + 8 * t.shape.size();
  return off + 8 + r.metadata.size();
}

TEST(Record, RoundTripIsByteExact) {
  const auto r = sample_record();
  const auto bytes = encode_record(r);
  const auto back = decode_record(bytes);
  EXPECT_TRUE(back.tensors.values_equal(r.tensors));
  EXPECT_EQ(back.metadata, r.metadata);
  EXPECT_EQ(encode_record(back), bytes);
}

TEST(Record, SaveLoadSaveFiles) {
  testing::TempDir tmp;
  const auto r = sample_record();
  save_record(tmp / "a.cmrk", r);
  save_record(tmp / "b.cmrk", load_record(tmp / "a.cmrk"));
  EXPECT_EQ(read_file(tmp / "a.cmrk"), read_file(tmp / "b.cmrk"));
  EXPECT_FALSE(std::filesystem::exists(tmp / "a.cmrk.tmp"));
}

TEST(Record, MissingFileIsIoError) {
  testing::TempDir tmp;
  try {
    load_record(tmp / "absent.cmrk");
    FAIL() << "expected an io error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(Record, TamperedLengthPrefixNamesOffset) {
  const auto r = sample_record();
  auto bytes = encode_record(r);
  const auto off = first_payload_offset(r);
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + off, 8);
  ASSERT_EQ(len, 24u);
  len = 20;
  std::memcpy(bytes.data() + off, &len, 8);
  try {
    decode_record(bytes);
    FAIL() << "expected a checkpoint error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCheckpoint);
    EXPECT_NE(std::string(e.what()).find("offset " + std::to_string(off + 8)), std::string::npos) << e.what();
  }
}

TEST(Record, EveryTruncationIsRejected) {
  const auto bytes = encode_record(sample_record());
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
    EXPECT_THROW(decode_record(cut), Error) << "prefix " << n;
  }
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(decode_record(extra), Error);
}

TEST(Record, BadMagicVersionAndDtype) {
  auto bytes = encode_record(sample_record());
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_record(bad), Error);
  bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(decode_record(bad), Error);
  bad = bytes;
  bad[16 + 4 + std::strlen("sub0.layer0.readout.weight")] = 7;  // dtype of the first entry
  EXPECT_THROW(decode_record(bad), Error);
}

// Single-byte corruption anywhere in the manifest either decodes or raises a
// checkpoint error; it never crashes or returns a partial record silently.
TEST(Record, ManifestByteFlipsAreContained) {
  const auto r = sample_record();
  const auto bytes = encode_record(r);
  for (std::size_t i = 0; i < first_payload_offset(r); ++i) {
    auto bad = bytes;
    bad[i] ^= 0xFF;
    try {
      const auto out = decode_record(bad);
      EXPECT_EQ(out.tensors.size(), r.tensors.size());
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kCheckpoint);
    }
  }
}

}  // namespace
}  // namespace certmark
