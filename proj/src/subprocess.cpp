// Copyright 2026 The sopt Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "subprocess.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char **environ;

namespace sopt {

namespace {

void setNonBlocking(int Fd) {
  int Flags = fcntl(Fd, F_GETFL, 0);
  fcntl(Fd, F_SETFL, Flags | O_NONBLOCK);
}

struct SigpipeGuard {
  SigpipeGuard() { signal(SIGPIPE, SIG_IGN); }
};

} // namespace

ExecResult runProcess(const std::string &Path,
                      const std::vector<std::string> &Args,
                      const std::string &Input, unsigned TimeoutMillis) {
  static SigpipeGuard Guard;
  ExecResult R;

  // O_CLOEXEC keeps concurrently spawned children from inheriting each
  // other's pipe ends (a stray write end would hide EOF from its owner).
  int InPipe[2], OutPipe[2], ErrPipe[2];
  if (pipe2(InPipe, O_CLOEXEC) || pipe2(OutPipe, O_CLOEXEC) ||
      pipe2(ErrPipe, O_CLOEXEC)) {
    R.SpawnFailed = true;
    R.Err = "pipe2() failed";
    return R;
  }

  // posix_spawn keeps us safe when several worker threads launch solver
  // processes at once (a raw fork could inherit a held allocator lock).
  std::vector<char *> Argv;
  Argv.push_back(const_cast<char *>(Path.c_str()));
  for (const auto &A : Args)
    Argv.push_back(const_cast<char *>(A.c_str()));
  Argv.push_back(nullptr);

  posix_spawn_file_actions_t Actions;
  posix_spawn_file_actions_init(&Actions);
  // dup2 clears close-on-exec on the standard fds; the originals close at
  // exec via O_CLOEXEC.
  posix_spawn_file_actions_adddup2(&Actions, InPipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&Actions, OutPipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&Actions, ErrPipe[1], STDERR_FILENO);

  posix_spawnattr_t Attr;
  posix_spawnattr_init(&Attr);
  posix_spawnattr_setpgroup(&Attr, 0);
  posix_spawnattr_setflags(&Attr, POSIX_SPAWN_SETPGROUP);

  pid_t Pid = -1;
  int SpawnRc =
      posix_spawnp(&Pid, Path.c_str(), &Actions, &Attr, Argv.data(), environ);
  posix_spawn_file_actions_destroy(&Actions);
  posix_spawnattr_destroy(&Attr);
  if (SpawnRc != 0) {
    R.SpawnFailed = true;
    R.Err = std::string("posix_spawnp failed: ") + strerror(SpawnRc);
    close(InPipe[0]);
    close(InPipe[1]);
    close(OutPipe[0]);
    close(OutPipe[1]);
    close(ErrPipe[0]);
    close(ErrPipe[1]);
    return R;
  }

  close(InPipe[0]);
  close(OutPipe[1]);
  close(ErrPipe[1]);
  setNonBlocking(InPipe[1]);
  setNonBlocking(OutPipe[0]);
  setNonBlocking(ErrPipe[0]);

  auto Deadline = std::chrono::steady_clock::now() +
                  std::chrono::milliseconds(TimeoutMillis);
  size_t Written = 0;
  bool StdinOpen = true, StdoutOpen = true, StderrOpen = true;
  char Buf[65536];

  while (StdoutOpen || StderrOpen || StdinOpen) {
    auto Now = std::chrono::steady_clock::now();
    if (Now >= Deadline) {
      R.TimedOut = true;
      break;
    }
    int WaitMs = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(Deadline - Now)
            .count());
    if (WaitMs < 1)
      WaitMs = 1;

    struct pollfd Fds[3];
    int N = 0;
    int InIdx = -1, OutIdx = -1, ErrIdx = -1;
    if (StdinOpen) {
      InIdx = N;
      Fds[N++] = {InPipe[1], POLLOUT, 0};
    }
    if (StdoutOpen) {
      OutIdx = N;
      Fds[N++] = {OutPipe[0], POLLIN, 0};
    }
    if (StderrOpen) {
      ErrIdx = N;
      Fds[N++] = {ErrPipe[0], POLLIN, 0};
    }
    int Rc = poll(Fds, N, WaitMs);
    if (Rc < 0) {
      if (errno == EINTR)
        continue;
      break;
    }
    if (Rc == 0)
      continue;

    if (InIdx >= 0 && (Fds[InIdx].revents & (POLLOUT | POLLERR | POLLHUP))) {
      if (Written < Input.size() && (Fds[InIdx].revents & POLLOUT)) {
        ssize_t W = write(InPipe[1], Input.data() + Written,
                          Input.size() - Written);
        if (W > 0)
          Written += static_cast<size_t>(W);
        else if (W < 0 && errno != EAGAIN && errno != EINTR) {
          close(InPipe[1]);
          StdinOpen = false;
        }
      }
      if (StdinOpen &&
          (Written >= Input.size() || (Fds[InIdx].revents & (POLLERR | POLLHUP)))) {
        close(InPipe[1]);
        StdinOpen = false;
      }
    }
    auto drain = [&](int Idx, int Fd, std::string &Sink, bool &Open) {
      if (Idx < 0 || !(Fds[Idx].revents & (POLLIN | POLLHUP | POLLERR)))
        return;
      while (true) {
        ssize_t Rd = read(Fd, Buf, sizeof(Buf));
        if (Rd > 0) {
          Sink.append(Buf, static_cast<size_t>(Rd));
          continue;
        }
        if (Rd == 0) {
          close(Fd);
          Open = false;
        }
        break;
      }
    };
    drain(OutIdx, OutPipe[0], R.Out, StdoutOpen);
    drain(ErrIdx, ErrPipe[0], R.Err, StderrOpen);
  }

  if (StdinOpen)
    close(InPipe[1]);
  if (StdoutOpen)
    close(OutPipe[0]);
  if (StderrOpen)
    close(ErrPipe[0]);

  if (R.TimedOut) {
    kill(-Pid, SIGKILL);
    kill(Pid, SIGKILL);
  }

  int Status = 0;
  if (R.TimedOut) {
    waitpid(Pid, &Status, 0);
    R.ExitCode = -1;
  } else {
    // Streams are closed but the child may linger; wait out the remaining
    // budget before killing it.
    while (true) {
      pid_t Done = waitpid(Pid, &Status, WNOHANG);
      if (Done == Pid) {
        if (WIFEXITED(Status))
          R.ExitCode = WEXITSTATUS(Status);
        break;
      }
      if (Done < 0 && errno != EINTR)
        break;
      if (std::chrono::steady_clock::now() >= Deadline) {
        R.TimedOut = true;
        kill(-Pid, SIGKILL);
        kill(Pid, SIGKILL);
        waitpid(Pid, &Status, 0);
        break;
      }
      usleep(1000);
    }
    if (R.ExitCode == 127 && R.Out.empty())
      R.SpawnFailed = true;
  }
  return R;
}

} // namespace sopt
