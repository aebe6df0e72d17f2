/*
 * Copyright 2026 The gldet Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "gldet/checkpoint.hpp"
#include "gldet/error.hpp"

namespace gldet {
namespace {

using testing::ReadText;
using testing::TempDir;
using testing::WriteText;

ParameterSet<float> FloatSet() {
  ParameterSet<float> p;
  p.Add("a.weight", {2, 3});
  p.Add("a.bias", {3});
  for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = 0.1f * static_cast<float>(i) - 0.25f;
  return p;
}

ParameterSet<double> DoubleSet() {
  ParameterSet<double> p;
  p.Add("w", {4});
  for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = 1.0 / (3.0 + i);
  return p;
}

TEST(ParameterSet, OffsetsAndLookup) {
  ParameterSet<float> p;
  EXPECT_EQ(p.Add("x", {2, 2}), 0u);
  EXPECT_EQ(p.Add("y", {3}), 4u);
  EXPECT_EQ(p.size(), 7u);
  EXPECT_EQ(p.Get("y").size(), 3u);
  EXPECT_THROW(p.Add("x", {1}), ArgumentError);
  EXPECT_THROW(p.Get("z"), ArgumentError);
}

TEST(Archive, RoundTripIsExact) {
  TempDir dir("ckpt");
  TensorArchive a;
  a.meta = {{"format", "test"}, {"n", 3}};
  a.AddParameters("f.", FloatSet());
  a.AddParameters("d.", DoubleSet());
  WriteArchive(dir / "x.ckpt", a);
  const TensorArchive b = ReadArchive(dir / "x.ckpt");
  EXPECT_EQ(b.meta, a.meta);
  ASSERT_EQ(b.tensors.size(), 3u);
  ParameterSet<float> f = FloatSet();
  for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = 0.0f;
  b.LoadParameters("f.", f);
  EXPECT_TRUE(f == FloatSet());
  ParameterSet<double> d = DoubleSet();
  d.data()[0] = 0.0;
  b.LoadParameters("d.", d);
  EXPECT_TRUE(d == DoubleSet());
}

TEST(Archive, FileStartsWithMagic) {
  TempDir dir("ckpt");
  WriteArchive(dir / "x.ckpt", TensorArchive{});
  EXPECT_EQ(ReadText(dir / "x.ckpt").substr(0, 8), "GLDETCKP");
}

TEST(Archive, LoadIsAllOrNothing) {
  TempDir dir("ckpt");
  TensorArchive a;
  a.AddParameters("", FloatSet());
  // Drop the second tensor: the first must not be copied either.
  a.tensors.pop_back();
  ParameterSet<float> target = FloatSet();
  for (std::size_t i = 0; i < target.size(); ++i) target.data()[i] = 9.0f;
  const ParameterSet<float> before = target;
  EXPECT_THROW(a.LoadParameters("", target), FormatError);
  EXPECT_TRUE(target == before);
}

TEST(Archive, ShapeAndDtypeMismatchRejected) {
  TensorArchive a;
  a.AddParameters("", FloatSet());
  ParameterSet<float> other;
  other.Add("a.weight", {3, 2});
  other.Add("a.bias", {3});
  EXPECT_THROW(a.LoadParameters("", other), FormatError);
  ParameterSet<double> wrong_type;
  wrong_type.Add("a.weight", {2, 3});
  wrong_type.Add("a.bias", {3});
  EXPECT_THROW(a.LoadParameters("", wrong_type), FormatError);
}

TEST(Archive, CorruptFilesAreFormatErrors) {
  TempDir dir("ckpt");
  TensorArchive a;
  a.AddParameters("", DoubleSet());
  WriteArchive(dir / "good.ckpt", a);
  const std::string good = ReadText(dir / "good.ckpt");

  WriteText(dir / "magic.ckpt", "NOTACKPT" + good.substr(8));
  EXPECT_THROW(ReadArchive(dir / "magic.ckpt"), FormatError);

  WriteText(dir / "short.ckpt", good.substr(0, good.size() - 5));
  EXPECT_THROW(ReadArchive(dir / "short.ckpt"), FormatError);

  WriteText(dir / "tiny.ckpt", good.substr(0, 10));
  EXPECT_THROW(ReadArchive(dir / "tiny.ckpt"), FormatError);

  std::string version = good;
  version[8] = 7;
  WriteText(dir / "version.ckpt", version);
  EXPECT_THROW(ReadArchive(dir / "version.ckpt"), FormatError);

  std::string header = good;
  header[20] = '}';
  WriteText(dir / "header.ckpt", header);
  EXPECT_THROW(ReadArchive(dir / "header.ckpt"), FormatError);

  EXPECT_THROW(ReadArchive(dir / "missing.ckpt"), IoError);
}

}  // namespace
}  // namespace gldet
