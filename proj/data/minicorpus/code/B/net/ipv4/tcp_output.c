#include <linux/types.h>
#include <net/tcp.h>

extern void tcp_transmit(struct tcp_sock *tp, u32 seq, int syn, int ack);

/* Pick the initial sequence number for an active open. */
static void tcp_connect_init(struct tcp_sock *tp)
{
	tp->write_seq = secure_tcp_seq(tp->saddr, tp->daddr, tp->sport, tp->dport);
	tp->snd_nxt = tp->write_seq;
}

/* Start the three-way handshake by sending a SYN. */
int tcp_connect(struct tcp_sock *tp)
{
	tcp_connect_init(tp);
	tp->state = TCP_SYN_SENT;
	tcp_transmit(tp, tp->write_seq, 1, 0);
	tp->snd_nxt = tp->write_seq + 1;
	return 0;
}

void tcp_send_ack(struct tcp_sock *tp)
{
	tcp_transmit(tp, tp->snd_nxt, 0, 1);
}
