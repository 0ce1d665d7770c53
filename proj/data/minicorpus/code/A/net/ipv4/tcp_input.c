#include <linux/types.h>
#include <net/tcp.h>

extern void tcp_send_ack(struct tcp_sock *tp);
extern void tcp_done(struct tcp_sock *tp);

static unsigned int challenge_count;

/* Answer a suspicious segment with an ACK carrying RCV.NXT. */
void tcp_send_challenge_ack(struct tcp_sock *tp)
{
	challenge_count++;
	tcp_send_ack(tp);
}

static void tcp_reset(struct tcp_sock *tp)
{
	tcp_done(tp);
}

static bool tcp_sequence(const struct tcp_sock *tp, u32 seq)
{
	return !before(seq, tp->rcv_nxt) && before(seq, tp->rcv_nxt + tp->rcv_wnd);
}

/*
 * Reset and SYN checks for a synchronized connection: an in-window RST that
 * does not hit RCV.NXT exactly, and any SYN, draw a challenge ACK.
 */
static bool tcp_validate_incoming(struct tcp_sock *tp, const struct tcphdr *th)
{
	if (!tcp_sequence(tp, th->seq)) {
		if (!th->rst)
			tcp_send_ack(tp);
		return false;
	}
	if (th->rst) {
		if (th->seq == tp->rcv_nxt)
			tcp_reset(tp);
		else
			tcp_send_challenge_ack(tp);
		return false;
	}
	if (th->syn) {
		tcp_send_challenge_ack(tp);
		return false;
	}
	return true;
}

int tcp_rcv_established(struct tcp_sock *tp, const struct tcphdr *th)
{
	if (!tcp_validate_incoming(tp, th))
		return 0;
	tp->rcv_nxt = th->seq + 1;
	return 1;
}
